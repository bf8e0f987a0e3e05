"""Train/predict entry points shared by all six classifier kinds, plus serialization."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..features import FeatureVector
from . import forest, knn, logistic, naive_bayes, svm, tree
from .spec import (
    DegenerateLabelsError,
    DimensionError,
    ModelSpec,
    VocabularyBindingError,
)

FORMAT_VERSION = 1


def as_label_array(y: Sequence) -> np.ndarray:
    """Labels as int64 with 1 = related; accepts ints, bools or label strings."""
    arr = np.asarray(y)
    if arr.dtype.kind in "US":
        bad = set(arr.tolist()) - {"related", "unrelated"}
        if bad:
            raise ValueError(f"unknown labels {sorted(bad)}")
        return (arr == "related").astype(np.int64)
    arr = arr.astype(np.int64)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("numeric labels must be 0 or 1")
    return arr


def _as_matrix(X) -> sp.csr_matrix:
    if isinstance(X, FeatureVector):
        return X.to_csr()
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=float)
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    return sp.csr_matrix(arr)


def _freeze(obj):
    if isinstance(obj, np.ndarray):
        obj.setflags(write=False)
    elif sp.issparse(obj):
        for a in (obj.data, obj.indices, obj.indptr):
            a.setflags(write=False)
    elif isinstance(obj, dict):
        for v in obj.values():
            _freeze(v)
    elif isinstance(obj, list):
        for v in obj:
            _freeze(v)
    return obj


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    state: Mapping[str, Any]
    n_features: int
    vocab_fingerprint: str | None = None

    @property
    def kind(self) -> str:
        return self.spec.kind


def train_model(spec: ModelSpec, X, y, seed: int = 42, vocab_fingerprint: str | None = None) -> TrainedModel:
    """Fit ``spec`` on feature matrix ``X`` (dense or sparse) and labels ``y``."""
    X = _as_matrix(X)
    y = as_label_array(y)
    if X.shape[1] == 0:
        raise DimensionError("feature matrix has no columns (empty vocabulary?)")
    if X.shape[0] != len(y):
        raise DimensionError(f"X has {X.shape[0]} rows but y has {len(y)} labels")
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise DegenerateLabelsError("training labels must contain both classes")
    p = spec.params
    kind = spec.kind
    if kind == "multinomial_nb":
        state = naive_bayes.fit(X, y, p["alpha"], p["fit_prior"])
    elif kind == "logreg":
        state = logistic.fit(X, y, p["C"], p["max_iter"], p["tol"])
    elif kind == "dtree":
        state = tree.fit(X, y, p["min_samples_leaf"])
    elif kind == "knn":
        state = knn.fit(X, y, p["n_neighbors"])
    elif kind == "svm":
        state = svm.fit(X, y, p["C"], p["gamma"], p["coef0"], p["tol"], p["max_passes"])
    else:
        state = forest.fit(
            X, y, seed, p["n_estimators"], p["max_features"], p["bootstrap"], p["min_samples_leaf"]
        )
    return TrainedModel(spec, _freeze(state), X.shape[1], vocab_fingerprint)


def _check_binding(model: TrainedModel, x) -> None:
    fp = getattr(x, "vocab_fingerprint", None)
    if fp is not None and model.vocab_fingerprint is not None and fp != model.vocab_fingerprint:
        raise VocabularyBindingError("feature vector was built with a different vocabulary than the model")


def predict_scores(model: TrainedModel, X) -> np.ndarray:
    """P(related)-style scores in [0, 1] for every row of ``X``."""
    _check_binding(model, X)
    X = _as_matrix(X)
    if X.shape[1] != model.n_features:
        raise VocabularyBindingError(f"expected {model.n_features} features, got {X.shape[1]}")
    s = model.state
    kind = model.kind
    if kind == "multinomial_nb":
        return naive_bayes.score(s, X)
    if kind == "logreg":
        return logistic.score(s, X)
    if kind == "dtree":
        return tree.score(s, X)
    if kind == "knn":
        return knn.score(s, X, model.spec["n_neighbors"])
    if kind == "svm":
        return svm.score(s, X)
    return forest.score(s, X)


def predict_labels(model: TrainedModel, X) -> np.ndarray:
    """Hard labels (1 = related). A score of exactly 0.5 is a tie and maps to unrelated."""
    return (predict_scores(model, X) > 0.5).astype(np.int64)


def predict_score(model: TrainedModel, x) -> float:
    return float(predict_scores(model, x)[0])


def predict_label(model: TrainedModel, x) -> str:
    return "related" if predict_labels(model, x)[0] == 1 else "unrelated"


# -- serialization ---------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    s = format(x, ".17g")
    return s if any(ch in s for ch in ".en") else s + ".0"


def _encode(obj) -> Any:
    if sp.issparse(obj):
        m = sp.csr_matrix(obj)
        return {
            "__csr__": True,
            "shape": list(m.shape),
            "data": _encode(m.data),
            "indices": _encode(m.indices.astype(np.int64)),
            "indptr": _encode(m.indptr.astype(np.int64)),
        }
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.dtype.str, "shape": list(obj.shape), "data": obj.ravel().tolist()}
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _decode(obj) -> Any:
    if isinstance(obj, dict):
        if obj.get("__csr__"):
            return sp.csr_matrix(
                (_decode(obj["data"]), _decode(obj["indices"]), _decode(obj["indptr"])),
                shape=tuple(obj["shape"]),
            )
        if "__ndarray__" in obj:
            return np.array(obj["data"], dtype=np.dtype(obj["__ndarray__"])).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Deterministic compact JSON with floats written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{canonical_json(v)}" for k, v in sorted(obj.items())) + "}"
    if isinstance(obj, list):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "vocab_fingerprint": model.vocab_fingerprint,
        "n_features": model.n_features,
        "state": _encode(dict(model.state)),
    }


def dumps_model(model: TrainedModel) -> str:
    return canonical_json(model_to_dict(model))


def model_from_dict(obj: Mapping) -> TrainedModel:
    if obj.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {obj.get('format_version')!r}")
    return TrainedModel(
        ModelSpec.from_dict(obj["spec"]),
        _freeze(_decode(obj["state"])),
        int(obj["n_features"]),
        obj.get("vocab_fingerprint"),
    )


def loads_model(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))
