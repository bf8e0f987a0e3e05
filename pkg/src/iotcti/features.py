"""Vocabulary fitting and TF-IDF document vectors."""
from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

WEIGHTINGS = ("tfidf", "counts")


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Term → column index map plus document frequencies of the fitted corpus."""

    terms: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int
    _fingerprint: str = field(default="", init=False, repr=False, compare=False)

    def __post_init__(self):
        if sorted(self.terms.values()) != list(range(len(self.terms))):
            raise ValueError("term indices must be 0..n-1 without gaps")
        for t, df in self.doc_freq.items():
            if not 1 <= df <= self.n_docs:
                raise ValueError(f"doc_freq[{t!r}]={df} outside [1, {self.n_docs}]")
        object.__setattr__(self, "_fingerprint", hashlib.sha256(self.to_json().encode()).hexdigest())

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def idf(self, term: str) -> float:
        return math.log((1 + self.n_docs) / (1 + self.doc_freq[term])) + 1.0

    def idf_vector(self) -> np.ndarray:
        out = np.empty(len(self.terms))
        for t, i in self.terms.items():
            out[i] = self.idf(t)
        return out

    def to_dict(self) -> dict:
        rows = sorted(self.terms.items(), key=lambda kv: kv[1])
        return {"n_docs": self.n_docs, "terms": [[t, i, self.doc_freq[t]] for t, i in rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "Vocabulary":
        terms = {t: int(i) for t, i, _ in obj["terms"]}
        doc_freq = {t: int(df) for t, _, df in obj["terms"]}
        return cls(terms, doc_freq, int(obj["n_docs"]))

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FeatureVector:
    """Sparse row: strictly increasing column indices with nonnegative weights."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]
    dim: int
    vocab_fingerprint: str | None = None

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices, self.weights))

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.asarray(self.weights, dtype=float), np.asarray(self.indices, dtype=np.int64), [0, len(self.indices)]),
            shape=(1, self.dim),
        )

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[list(self.indices)] = self.weights
        return out


def fit_vocabulary(corpus: Sequence[Sequence[str]]) -> Vocabulary:
    """Collect every distinct token; terms are indexed in lexicographic order."""
    if len(corpus) == 0:
        raise FitError("cannot fit a vocabulary on an empty corpus")
    df: Counter = Counter()
    for doc in corpus:
        df.update(set(doc))
    terms = {t: i for i, t in enumerate(sorted(df))}
    return Vocabulary(terms, dict(df), len(corpus))


def _weigh(doc: Iterable[str], vocab: Vocabulary, weighting: str) -> tuple[list[int], list[float]]:
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    counts = Counter(t for t in doc if t in vocab.terms)
    items = sorted((vocab.terms[t], t) for t in counts)
    cols = [c for c, _ in items]
    if weighting == "counts":
        return cols, [float(counts[t]) for _, t in items]
    w = [counts[t] * vocab.idf(t) for _, t in items]
    norm = math.sqrt(math.fsum(x * x for x in w))
    if norm > 0:
        w = [x / norm for x in w]
    return cols, w


def transform(doc: Sequence[str], vocab: Vocabulary, weighting: str = "tfidf") -> FeatureVector:
    """Map a token sequence to an L2-normalized TF-IDF vector.

    ``weighting="counts"`` returns raw term counts instead (no normalization).
    Out-of-vocabulary tokens are ignored.
    """
    cols, w = _weigh(doc, vocab, weighting)
    return FeatureVector(tuple(cols), tuple(w), len(vocab), vocab.fingerprint)


def transform_many(docs: Sequence[Sequence[str]], vocab: Vocabulary, weighting: str = "tfidf") -> sp.csr_matrix:
    """Stack transformed documents into a CSR matrix of shape (len(docs), |vocab|)."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        cols, w = _weigh(doc, vocab, weighting)
        indices.extend(cols)
        data.extend(w)
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), len(vocab)),
    )
