"""k-fold cross-validation and grid search over model specifications."""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .classifiers import ModelSpec, as_label_array, predict_labels, train_model
from .metrics import MetricsReport, evaluate, mean_report

# Small neighbourhoods around the reported settings; reported values are included.
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "logreg": {"C": [1.0, 10.0, 100.0]},
    "multinomial_nb": {"alpha": [0.01, 0.1, 1.0]},
    "dtree": {"min_samples_leaf": [1, 5, 10]},
    "knn": {"n_neighbors": [3, 5, 7]},
    "svm": {"C": [0.1, 1.0, 10.0]},
    "rforest": {"n_estimators": [100, 300, 500]},
}


class DegenerateFoldError(ValueError):
    def __init__(self, fold: int):
        self.fold = fold
        super().__init__(f"training data outside fold {fold} holds a single class")


class GridCellError(ValueError):
    def __init__(self, spec: ModelSpec, cause: Exception):
        self.spec = spec
        super().__init__(f"{spec.label()}: {cause}")


@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray
    k: int
    seed: int

    def folds(self):
        for f in range(self.k):
            yield f, np.flatnonzero(self.assignments == f)


def kfold_indices(n: int, k: int = 10, seed: int = 42, y: Sequence | None = None, stratify: bool = False) -> FoldPlan:
    """Shuffle ``range(n)`` with ``seed`` and cut it into ``k`` contiguous chunks.

    With ``stratify=True`` (labels required) each label is shuffled and dealt
    round-robin so every fold gets a near-equal share of both classes.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise ValueError(f"cannot make {k} folds from {n} samples")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=np.int64)
    if stratify:
        if y is None:
            raise ValueError("stratified folds need labels")
        labels = as_label_array(y)
        offset = 0
        for lab in (1, 0):
            idx = rng.permutation(np.flatnonzero(labels == lab))
            assignments[idx] = (np.arange(len(idx)) + offset) % k
            offset += len(idx)
    else:
        order = rng.permutation(n)
        for f, chunk in enumerate(np.array_split(order, k)):
            assignments[chunk] = f
    assignments.setflags(write=False)
    return FoldPlan(assignments, k, seed)


def _rows(X, idx):
    return X[idx] if sp.issparse(X) else np.asarray(X)[idx]


def cross_val_predictions(spec: ModelSpec, X, y, plan: FoldPlan, seed: int = 42) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per fold, the evaluated sample indices and the predictions made for them."""
    y = as_label_array(y)
    if len(plan.assignments) != len(y):
        raise ValueError("fold plan does not match the number of samples")
    out = []
    for f, test_idx in plan.folds():
        train_idx = np.flatnonzero(plan.assignments != f)
        if len(np.unique(y[train_idx])) < 2:
            raise DegenerateFoldError(f)
        model = train_model(spec, _rows(X, train_idx), y[train_idx], seed)
        out.append((test_idx, predict_labels(model, _rows(X, test_idx))))
    return out


def cross_validate(spec: ModelSpec, X, y, plan: FoldPlan, seed: int = 42) -> MetricsReport:
    """Mean of the per-fold metric reports."""
    y = as_label_array(y)
    folds = cross_val_predictions(spec, X, y, plan, seed)
    return mean_report([evaluate(pred, y[idx]) for idx, pred in folds])


@dataclass(frozen=True)
class GridResult:
    table: list[tuple[ModelSpec, MetricsReport]]
    best: ModelSpec
    best_index: int = 0

    def to_csv(self) -> str:
        param_names = sorted({k for spec, _ in self.table for k in spec.params})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", *param_names, "f1", "precision", "recall", "accuracy", "best"])
        for i, (spec, rep) in enumerate(self.table):
            w.writerow([
                spec.kind,
                *(spec.params.get(p, "") for p in param_names),
                f"{rep.f1:.6f}", f"{rep.precision:.6f}", f"{rep.recall:.6f}", f"{rep.accuracy:.6f}",
                int(i == self.best_index),
            ])
        return buf.getvalue()


def grid_search(grid: Sequence[ModelSpec], X, y, plan: FoldPlan, seed: int = 42) -> GridResult:
    """Cross-validate every spec; the best has the highest mean macro F1, earliest on ties."""
    if not grid:
        raise ValueError("grid is empty")
    table = []
    for spec in grid:
        try:
            table.append((spec, cross_validate(spec, X, y, plan, seed)))
        except ValueError as exc:
            raise GridCellError(spec, exc) from exc
    best_i = 0
    for i, (_, rep) in enumerate(table):
        if rep.f1 > table[best_i][1].f1:
            best_i = i
    return GridResult(table, table[best_i][0], best_i)


def expand_grid(grid: Mapping[str, Mapping[str, Sequence]]) -> list[ModelSpec]:
    """Cartesian product of parameter lists, per kind, in declaration order."""
    specs = []
    for kind, params in grid.items():
        names = list(params)
        for values in itertools.product(*(params[n] for n in names)):
            specs.append(ModelSpec(kind, dict(zip(names, values))))
    return specs


def load_grid(path: str | Path) -> list[ModelSpec]:
    return expand_grid(json.loads(Path(path).read_text(encoding="utf-8")))
