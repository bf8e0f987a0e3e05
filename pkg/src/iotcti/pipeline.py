"""Text-to-label pipeline: preprocessing, vocabulary, weighting and a trained model."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import ModelSpec, TrainedModel, model_from_dict, model_to_dict, predict_labels, predict_scores, train_model
from .classifiers.model import canonical_json
from .corpus import LabeledDoc
from .features import Vocabulary, fit_vocabulary, transform, transform_many
from .textprep import load_stopwords, preprocess

BUNDLE_VERSION = 1


@dataclass(frozen=True)
class Pipeline:
    vocab: Vocabulary
    model: TrainedModel
    stopwords: frozenset[str]
    weighting: str = "tfidf"

    def tokens(self, texts: Sequence[str]) -> list[list[str]]:
        return [preprocess(t, self.stopwords) for t in texts]

    def features(self, texts: Sequence[str]):
        return transform_many(self.tokens(texts), self.vocab, self.weighting)

    def vector(self, text: str):
        return transform(preprocess(text, self.stopwords), self.vocab, self.weighting)

    def predict(self, texts: Sequence[str]) -> np.ndarray:
        return predict_labels(self.model, self.features(texts))

    def score(self, texts: Sequence[str]) -> np.ndarray:
        return predict_scores(self.model, self.features(texts))

    def to_json(self) -> str:
        return canonical_json({
            "format_version": BUNDLE_VERSION,
            "weighting": self.weighting,
            "stopwords": sorted(self.stopwords),
            "vocabulary": self.vocab.to_dict(),
            "model": model_to_dict(self.model),
        })

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "Pipeline":
        obj = json.loads(text)
        if obj.get("format_version") != BUNDLE_VERSION:
            raise ValueError(f"unsupported pipeline format_version {obj.get('format_version')!r}")
        vocab = Vocabulary.from_dict(obj["vocabulary"])
        model = model_from_dict(obj["model"])
        if model.vocab_fingerprint != vocab.fingerprint:
            raise ValueError("model is not bound to the bundled vocabulary")
        return cls(vocab, model, frozenset(obj["stopwords"]), obj["weighting"])

    @classmethod
    def load(cls, path: str | Path) -> "Pipeline":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def fit_pipeline(
    docs: Sequence[LabeledDoc],
    spec: ModelSpec,
    seed: int = 42,
    weighting: str = "tfidf",
    stopwords: frozenset[str] | None = None,
) -> Pipeline:
    stopwords = load_stopwords() if stopwords is None else stopwords
    tokens = [preprocess(d.text, stopwords) for d in docs]
    vocab = fit_vocabulary(tokens)
    X = transform_many(tokens, vocab, weighting)
    y = [d.label for d in docs]
    model = train_model(spec, X, y, seed, vocab_fingerprint=vocab.fingerprint)
    return Pipeline(vocab, model, stopwords, weighting)
