"""Command-line front end: ingest, split, train, tune, evaluate, monitor, reproduce-table2.

Exit status is 0 on success, 1 on domain errors (one ``error: <kind>: <reason>``
line on stderr) and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import corpus as _corpus
from .classifiers import KINDS, ModelSpec, as_label_array
from .metrics import evaluate, format_table
from .model_select import DEFAULT_GRIDS, expand_grid, grid_search, kfold_indices, load_grid
from .pipeline import Pipeline, fit_pipeline
from .textprep import load_stopwords, preprocess
from .features import fit_vocabulary, transform_many

DEFAULT_SEED = 42
KIND_NAMES = {
    "rforest": "Random Forest",
    "dtree": "Decision Tree",
    "multinomial_nb": "Multinomial NB",
    "logreg": "Logistic Regression",
    "svm": "SVM",
    "knn": "Knn",
}
VARIANT_NAMES = {"no_cve_tag": "No CVE", "cve_tagged": "CVE"}


class UsageError(Exception):
    pass


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _require(path, what: str) -> Path:
    p = Path(path) if path else None
    if p is None:
        raise UsageError(f"missing {what}")
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _stopwords(args):
    return load_stopwords(args.stopwords) if args.stopwords else load_stopwords()


def _spec(args) -> ModelSpec:
    params = json.loads(args.params) if isinstance(args.params, str) else dict(args.params or {})
    return ModelSpec(args.kind, params)


# -- subcommands -----------------------------------------------------------

def cmd_ingest(args) -> int:
    feeds = [_require(f, "feed file") for f in args.feeds]
    report = _corpus.IngestReport()
    docs = _corpus.ingest_feeds(feeds, report)
    if args.limit:
        docs = docs[: args.limit]
    if args.out:
        _corpus.write_jsonl(docs, args.out)
    else:
        sys.stdout.write("".join(d.to_json() + "\n" for d in docs))
    sys.stderr.write(json.dumps(report.as_dict(), sort_keys=True) + "\n")
    return 0


def cmd_split(args) -> int:
    pool = _corpus.read_jsonl(_require(args.corpus, "corpus"))
    split = _corpus.build_balanced_splits(pool, args.train_size, args.val_size, args.seed, args.variant)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    _corpus.write_jsonl(split.train, out / "train.jsonl")
    _corpus.write_jsonl(split.validation, out / "validation.jsonl")
    summary = {
        "seed": split.seed,
        "variant": split.variant,
        "train": len(split.train),
        "validation": len(split.validation),
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def cmd_train(args) -> int:
    docs = _corpus.read_jsonl(_require(args.corpus, "corpus"))
    pipe = fit_pipeline(docs, _spec(args), args.seed, args.weighting, _stopwords(args))
    out = args.model or args.out
    if not out:
        raise UsageError("train needs --model or --out for the model file")
    pipe.save(out)
    train_report = evaluate(pipe.predict([d.text for d in docs]), [d.label for d in docs])
    sys.stdout.write(json.dumps({"spec": pipe.model.spec.to_dict(), "train_metrics": train_report.to_dict()}, sort_keys=True) + "\n")
    return 0


def cmd_tune(args) -> int:
    docs = _corpus.read_jsonl(_require(args.corpus, "corpus"))
    if args.grid:
        grid = load_grid(_require(args.grid, "grid file"))
    else:
        kinds = [args.kind] if args.kind else list(KINDS)
        grid = expand_grid({k: DEFAULT_GRIDS[k] for k in kinds})
    sw = _stopwords(args)
    tokens = [preprocess(d.text, sw) for d in docs]
    X = transform_many(tokens, fit_vocabulary(tokens), args.weighting)
    y = [d.label for d in docs]
    plan = kfold_indices(len(docs), args.folds, args.seed, y=y, stratify=args.stratify)
    result = grid_search(grid, X, y, plan, args.seed)
    _write(args.out, result.to_csv())
    sys.stderr.write(f"best: {result.best.label()}\n")
    return 0


def _read_predictions(path: Path) -> dict[str, str]:
    preds = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                preds[str(obj["doc_id"])] = obj["label"]
    return preds


def cmd_evaluate(args) -> int:
    docs = _corpus.read_jsonl(_require(args.corpus, "corpus"))
    if args.limit:
        docs = docs[: args.limit]
    if args.predictions:
        stored = _read_predictions(_require(args.predictions, "predictions file"))
        missing = [d.doc_id for d in docs if d.doc_id not in stored]
        if missing:
            raise ValueError(f"{len(missing)} documents have no stored prediction (first: {missing[0]})")
        preds = [stored[d.doc_id] for d in docs]
        name = "predictions"
    else:
        pipe = Pipeline.load(_require(args.model, "model file"))
        preds = as_label_array(pipe.predict([d.text for d in docs]))
        name = KIND_NAMES[pipe.model.kind]
    report = evaluate(preds, [d.label for d in docs])
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    sys.stdout.write(format_table([((name, args.variant and VARIANT_NAMES[args.variant] or ""), report)]) + "\n")
    return 0


def cmd_monitor(args) -> int:
    from . import monitor as mon

    pipe = Pipeline.load(_require(args.model, "model file"))
    keywords = mon.load_keywords(_require(args.keywords_file, "keywords file")) if args.keywords_file else mon.DEFAULT_KEYWORDS
    if args.replay:
        source = mon.replay_source(_require(args.replay, "replay file"))
    elif args.live:
        source = mon.LiveStreamSource(keywords, endpoint=args.endpoint, token_env=args.token_env)
    else:
        raise UsageError("monitor needs --replay FILE or --live")
    if args.out:
        sink = mon.JsonlSink.to_file(args.out, args.stats, timestamps_path=args.out + ".timestamps.jsonl")
    else:
        sink = mon.JsonlSink(sys.stdout, args.stats)
    stop = mon.StopCondition(max_events=args.limit or None, max_seconds=args.duration)
    try:
        stats = mon.run_monitor(source, pipe, sink, stop, keywords, args.exclude_retweets, args.workers)
    finally:
        sink.close()
    summary = stats.to_dict()
    summary["skipped"] = getattr(source, "skipped", 0)
    sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")
    if stats.partial:
        raise RuntimeError(f"monitor aborted: {stats.error}")
    return 0


def cmd_reproduce(args) -> int:
    pool = _corpus.read_jsonl(_require(args.corpus, "corpus"))
    test = _corpus.read_jsonl(_require(args.test, "test set")) if args.test else None
    sw = _stopwords(args)
    kinds = [args.kind] if args.kind else list(KIND_NAMES)
    variants = [args.variant] if args.variant else ["no_cve_tag", "cve_tagged"]
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    rows, records = [], []
    for kind in kinds:
        for variant in variants:
            split = _corpus.build_balanced_splits(pool, args.train_size, args.val_size, args.seed, variant)
            pipe = fit_pipeline(split.train, ModelSpec(kind), args.seed, args.weighting, sw)
            val_rep = evaluate(pipe.predict([d.text for d in split.validation]), [d.label for d in split.validation])
            rec = {"kind": kind, "variant": variant, "validation": val_rep.to_dict()}
            shown = val_rep
            if test is not None:
                shown = evaluate(pipe.predict([d.text for d in test]), [d.label for d in test])
                rec["test"] = shown.to_dict()
            records.append(rec)
            rows.append(((KIND_NAMES[kind], VARIANT_NAMES[variant]), shown))
    (out / "table2.json").write_text(json.dumps(records, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    table = format_table(rows, ("Classifier", "Training"))
    (out / "table2.txt").write_text(table + "\n", encoding="utf-8")
    sys.stdout.write(table + "\n")
    return 0


# -- parser ----------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file whose keys set defaults for any flag")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--variant", choices=_corpus.VARIANTS, default=None)
    p.add_argument("--model", help="pipeline bundle path")
    p.add_argument("--out", help="output path (file or directory)")
    p.add_argument("--keywords-file")
    p.add_argument("--stopwords", help="stopword list, one word per line")
    p.add_argument("--limit", type=int, default=0, help="cap on processed items (0 = no cap)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iotcti", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="NVD feeds -> labeled JSONL corpus")
    _common(p)
    p.add_argument("feeds", nargs="+", help="NVD JSON 1.1 feed files (.json or .json.gz)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="corpus -> balanced train/validation JSONL")
    _common(p)
    p.add_argument("--corpus")
    p.add_argument("--train-size", type=int, default=8924)
    p.add_argument("--val-size", type=int, default=4396)
    p.set_defaults(func=cmd_split, variant="cve_tagged")

    for name, func, help_ in (
        ("train", cmd_train, "train a pipeline bundle"),
        ("tune", cmd_tune, "grid search with k-fold CV; CSV table"),
    ):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--corpus")
        p.add_argument("--kind", choices=KINDS, default="rforest" if name == "train" else None)
        p.add_argument("--params", default="{}", help="JSON object of hyperparameters")
        p.add_argument("--weighting", choices=("tfidf", "counts"), default="tfidf")
        if name == "tune":
            p.add_argument("--grid", help="JSON grid: kind -> parameter -> list of values")
            p.add_argument("--folds", type=int, default=10)
            p.add_argument("--stratify", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="metrics of a model (or stored predictions) on a labeled corpus")
    _common(p)
    p.add_argument("--corpus")
    p.add_argument("--predictions", help="JSONL of {doc_id, label} predictions instead of --model")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("monitor", help="classify a keyword-filtered event stream")
    _common(p)
    p.add_argument("--replay", help="JSONL capture to replay")
    p.add_argument("--live", action="store_true", help="use the live filtered-stream adapter")
    p.add_argument("--endpoint", default="https://api.twitter.com/2/tweets/search/stream")
    p.add_argument("--token-env", default="TWITTER_BEARER_TOKEN")
    p.add_argument("--stats", help="write final MonitorStats JSON here")
    p.add_argument("--duration", type=float, default=None, help="stop after this many seconds")
    p.add_argument("--exclude-retweets", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("reproduce-table2", help="split -> train -> evaluate for six kinds x two variants")
    _common(p)
    p.add_argument("--corpus", help="labeled CVE pool (output of ingest)")
    p.add_argument("--test", help="labeled tweet set; validation split is used when absent")
    p.add_argument("--kind", choices=KINDS, default=None)
    p.add_argument("--train-size", type=int, default=8924)
    p.add_argument("--val-size", type=int, default=4396)
    p.add_argument("--weighting", choices=("tfidf", "counts"), default="tfidf")
    p.set_defaults(func=cmd_reproduce)
    return parser


def _config_defaults(argv: Sequence[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    path = Path(known.config)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    cfg = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(cfg, dict):
        raise ValueError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _apply_config(parser: argparse.ArgumentParser, cfg: dict, argv: Sequence[str]) -> None:
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp_ in sub_action.choices.items():
        known = {a.dest for a in sp_._actions}
        if argv and argv[0] == name and set(cfg) - known:
            parser.error(f"unknown config keys: {sorted(set(cfg) - known)}")
        sp_.set_defaults(**{k: v for k, v in cfg.items() if k in known})


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        cfg = _config_defaults(argv)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"error: config: {exc}\n")
        return 1
    try:
        if cfg:
            _apply_config(parser, cfg, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: usage: {exc}\n")
        return 2
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
