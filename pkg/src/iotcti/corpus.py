"""NVD feed ingestion, hardware-CPE labeling and balanced dataset splits.

Records come from the NVD "CVE JSON 1.1" annual feeds. A CVE is considered
IoT-related when at least one of its CPE descriptors names a hardware part.
"""
from __future__ import annotations

import gzip
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

RELATED = "related"
UNRELATED = "unrelated"
LABELS = (RELATED, UNRELATED)
SOURCES = ("cve", "tweet")
VARIANTS = ("cve_tagged", "no_cve_tag")

REJECT_MARKER = "** REJECT **"

CVE_ID_RE = re.compile(r"^CVE-(\d{4})-\d{4,7}$")
CVE_TAG_RE = re.compile(r"CVE-\d{4}-\d{4,7}", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")
# cpe:2.3:<part>:... (formatted string) or cpe:/<part>:... (legacy URI)
_CPE23_RE = re.compile(r"^cpe:2\.3:([aho\*\-]):", re.IGNORECASE)
_CPE22_RE = re.compile(r"^cpe:/([aho]):?", re.IGNORECASE)


class FeedParseError(ValueError):
    """Raised when a feed document cannot be decoded at all."""


class CapacityError(ValueError):
    """The pool holds too few documents of some label for the requested split."""

    def __init__(self, label: str, needed: int, available: int):
        self.label = label
        self.needed = needed
        self.available = available
        super().__init__(
            f"not enough '{label}' documents: need {needed}, have {available}"
        )


@dataclass(frozen=True)
class CveRecord:
    id: str
    description: str
    cpe_uris: tuple[str, ...]
    year: int
    status: str

    def __post_init__(self):
        if not CVE_ID_RE.match(self.id):
            raise ValueError(f"malformed CVE id: {self.id!r}")
        expected = "rejected" if self.description.startswith(REJECT_MARKER) else "active"
        if self.status != expected:
            raise ValueError(f"{self.id}: status {self.status!r} disagrees with description")


@dataclass(frozen=True)
class LabeledDoc:
    doc_id: str
    text: str
    label: str
    source: str = "cve"

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"document {self.doc_id!r} has empty text")
        if self.label not in LABELS:
            raise ValueError(f"document {self.doc_id!r}: unknown label {self.label!r}")
        if self.source not in SOURCES:
            raise ValueError(f"document {self.doc_id!r}: unknown source {self.source!r}")

    def to_json(self) -> str:
        return json.dumps(
            {"doc_id": self.doc_id, "text": self.text, "label": self.label, "source": self.source},
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[LabeledDoc, ...]
    validation: tuple[LabeledDoc, ...]
    seed: int
    variant: str

    def __post_init__(self):
        ids = {d.doc_id for d in self.train}
        if any(d.doc_id in ids for d in self.validation):
            raise ValueError("train and validation overlap")
        for name, part in (("train", self.train), ("validation", self.validation)):
            n_rel = sum(d.label == RELATED for d in part)
            if 2 * n_rel != len(part):
                raise ValueError(f"{name} split is not balanced")


@dataclass
class IngestReport:
    """Counters collected while turning feeds into a labeled corpus."""

    items: int = 0
    duplicates: int = 0
    rejected: int = 0
    records: int = 0
    related: int = 0
    cpe_warnings: int = 0
    skipped: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "items": self.items,
            "duplicates": self.duplicates,
            "rejected": self.rejected,
            "records": self.records,
            "related": self.related,
            "unrelated": self.records - self.related,
            "cpe_warnings": self.cpe_warnings,
            "skipped": len(self.skipped),
        }


def _iter_cpes(nodes: Iterable[dict]):
    for node in nodes or ():
        for match in node.get("cpe_match", ()) or ():
            for key in ("cpe23Uri", "cpe22Uri"):
                uri = match.get(key)
                if uri:
                    yield uri
        yield from _iter_cpes(node.get("children", ()))


def _record_from_item(item: dict) -> CveRecord:
    cve = item.get("cve") or {}
    cve_id = (cve.get("CVE_data_meta") or {}).get("ID")
    if not cve_id:
        raise KeyError("missing CVE id")
    m = CVE_ID_RE.match(cve_id)
    if not m:
        raise ValueError(f"malformed CVE id {cve_id!r}")
    descriptions = (cve.get("description") or {}).get("description_data") or []
    text = next(
        (d.get("value") for d in descriptions if d.get("lang", "en").lower().startswith("en") and d.get("value")),
        None,
    )
    if not text:
        raise KeyError(f"{cve_id}: missing English description")
    nodes = (item.get("configurations") or {}).get("nodes") or []
    status = "rejected" if text.startswith(REJECT_MARKER) else "active"
    return CveRecord(cve_id, text, tuple(_iter_cpes(nodes)), int(m.group(1)), status)


def _decode(feed_bytes: bytes | str) -> dict:
    if isinstance(feed_bytes, bytes) and feed_bytes[:2] == b"\x1f\x8b":
        feed_bytes = gzip.decompress(feed_bytes)
    try:
        doc = json.loads(feed_bytes)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FeedParseError(f"feed is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FeedParseError("feed root must be a JSON object")
    return doc


def parse_nvd_feed(feed_bytes: bytes | str, skipped: list | None = None) -> list[CveRecord]:
    """Parse one NVD JSON 1.1 feed (plain or gzip) into records.

    Items without an id or English description are not fatal; a
    ``(position, reason)`` pair is appended to ``skipped`` when given.
    """
    doc = _decode(feed_bytes)
    items = doc.get("CVE_Items", [])
    if not isinstance(items, list):
        raise FeedParseError("CVE_Items must be a list")
    records = []
    for pos, item in enumerate(items):
        try:
            records.append(_record_from_item(item))
        except (KeyError, ValueError, TypeError, AttributeError) as exc:
            if skipped is not None:
                skipped.append((pos, str(exc)))
    return records


def cpe_part(uri: str) -> str | None:
    """Return the part letter of a CPE URI, or None if it cannot be parsed."""
    m = _CPE23_RE.match(uri) or _CPE22_RE.match(uri)
    return m.group(1).lower() if m else None


def label_by_cpe(record: CveRecord, warnings: list | None = None) -> str:
    """Label a record as related iff any CPE descriptor is hardware ("h")."""
    if record.status != "active":
        raise ValueError(f"{record.id} is rejected and cannot be labeled")
    label = UNRELATED
    for uri in record.cpe_uris:
        part = cpe_part(uri)
        if part is None:
            if warnings is not None:
                warnings.append(uri)
        elif part == "h":
            label = RELATED
    return label


def strip_cve_tags(text: str) -> str:
    """Remove every CVE identifier from ``text`` and collapse whitespace."""
    return _WS_RE.sub(" ", CVE_TAG_RE.sub(" ", text)).strip()


_YEAR_IN_NAME = re.compile(r"(19|20)\d{2}")


def _feed_sort_key(path: Path):
    m = _YEAR_IN_NAME.search(path.name)
    return (int(m.group(0)) if m else 10**6, str(path))


def ingest_feeds(paths: Sequence[str | Path], report: IngestReport | None = None) -> list[LabeledDoc]:
    """Merge annual feeds into a deduplicated, labeled CVE corpus.

    Feeds are merged by year ascending; a CVE id seen again in a later feed
    replaces the earlier version. Rejected records are dropped.
    """
    report = report if report is not None else IngestReport()
    merged: dict[str, CveRecord] = {}
    for path in sorted((Path(p) for p in paths), key=_feed_sort_key):
        skipped: list = []
        records = parse_nvd_feed(path.read_bytes(), skipped)
        report.items += len(records) + len(skipped)
        report.skipped.extend((str(path), pos, why) for pos, why in skipped)
        for rec in records:
            if rec.id in merged:
                report.duplicates += 1
                del merged[rec.id]  # re-insert so order follows the latest version
            merged[rec.id] = rec
    docs = []
    warnings: list = []
    for rec in merged.values():
        if rec.status == "rejected":
            report.rejected += 1
            continue
        label = label_by_cpe(rec, warnings)
        docs.append(LabeledDoc(rec.id, rec.description, label, "cve"))
    report.records = len(docs)
    report.related = sum(d.label == RELATED for d in docs)
    report.cpe_warnings = len(warnings)
    return docs


def build_balanced_splits(
    pool: Sequence[LabeledDoc],
    train_size: int = 8924,
    val_size: int = 4396,
    seed: int = 42,
    variant: str = "cve_tagged",
) -> DatasetSplit:
    """Draw label-balanced train and validation sets from ``pool``.

    The pool is shuffled once with ``seed``; each label is then consumed in
    shuffled order, training set first.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if train_size % 2 or val_size % 2 or train_size < 0 or val_size < 0:
        raise ValueError("train_size and val_size must be non-negative even numbers")
    if len({d.doc_id for d in pool}) != len(pool):
        raise ValueError("pool contains duplicate doc_ids")
    order = np.random.default_rng(seed).permutation(len(pool))
    by_label = {lab: [pool[i] for i in order if pool[i].label == lab] for lab in LABELS}
    half_t, half_v = train_size // 2, val_size // 2
    for lab in LABELS:
        if len(by_label[lab]) < half_t + half_v:
            raise CapacityError(lab, half_t + half_v, len(by_label[lab]))

    rank = {int(i): r for r, i in enumerate(order)}
    index = {d.doc_id: i for i, d in enumerate(pool)}

    def take(lo: int, hi: int) -> tuple[LabeledDoc, ...]:
        chosen = by_label[RELATED][lo:hi] + by_label[UNRELATED][lo:hi]
        chosen.sort(key=lambda d: rank[index[d.doc_id]])
        if variant == "no_cve_tag":
            chosen = [LabeledDoc(d.doc_id, strip_cve_tags(d.text), d.label, d.source) for d in chosen]
        return tuple(chosen)

    return DatasetSplit(
        train=take(0, half_t),
        validation=take(half_t, half_t + half_v),
        seed=seed,
        variant=variant,
    )


def write_jsonl(docs: Iterable[LabeledDoc], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(doc.to_json() + "\n")


def read_jsonl(path: str | Path) -> list[LabeledDoc]:
    """Load a labeled corpus; every line must carry a valid label."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                docs.append(LabeledDoc(str(obj["doc_id"]), obj["text"], obj["label"], obj.get("source", "cve")))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus line ({exc})") from exc
    return docs
