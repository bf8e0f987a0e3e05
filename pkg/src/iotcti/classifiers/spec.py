"""Model specifications and per-kind default hyperparameters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

KINDS = ("logreg", "multinomial_nb", "dtree", "knn", "svm", "rforest")

# Reported settings plus the conventional defaults for everything left unstated.
DEFAULTS: dict[str, dict[str, Any]] = {
    "logreg": {"C": 10.0, "max_iter": 100, "tol": 1e-6},
    "multinomial_nb": {"alpha": 0.1, "fit_prior": True},
    "dtree": {"min_samples_leaf": 5},
    "knn": {"n_neighbors": 5},
    "svm": {"C": 1.0, "gamma": "scale", "coef0": 0.0, "tol": 1e-3, "max_passes": 10_000},
    "rforest": {
        "n_estimators": 300,
        "max_features": 0.75,
        "bootstrap": True,
        "min_samples_leaf": 1,
    },
}

# Parameters exempt from the strictly-positive rule.
_SIGNED = {"coef0"}


class DegenerateLabelsError(ValueError):
    """Training labels contain a single class."""


class DimensionError(ValueError):
    """Feature matrix has no columns or mismatched rows."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message: str, gap: float):
        self.gap = gap
        super().__init__(f"{message} (duality gap {gap:.3g})")


class VocabularyBindingError(ValueError):
    """A feature vector was built against a different vocabulary than the model."""


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        merged = {**DEFAULTS[self.kind], **self.params}
        for name, value in merged.items():
            if isinstance(value, bool) or isinstance(value, str) or name in _SIGNED:
                continue
            if not value > 0:
                raise ValueError(f"{self.kind}: {name} must be strictly positive, got {value}")
        if self.kind == "rforest" and not 0 < merged["max_features"] <= 1:
            raise ValueError("rforest: max_features fraction must lie in (0, 1]")
        if self.kind == "knn" and merged["n_neighbors"] % 2 == 0:
            raise ValueError("knn: n_neighbors must be odd")
        if self.kind == "svm" and merged["gamma"] != "scale" and isinstance(merged["gamma"], str):
            raise ValueError("svm: gamma must be 'scale' or a positive number")
        object.__setattr__(self, "params", dict(sorted(merged.items())))

    def __getitem__(self, name: str) -> Any:
        return self.params[name]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ModelSpec":
        return cls(obj["kind"], dict(obj.get("params", {})))

    def label(self) -> str:
        """Short human-readable form, e.g. ``knn(n_neighbors=5)``."""
        items = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.kind}({items})"


def default_spec(kind: str) -> ModelSpec:
    return ModelSpec(kind)
