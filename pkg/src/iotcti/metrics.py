"""Confusion matrices and macro-averaged binary classification metrics.

The positive class is ``related``. Reported precision, recall and F1 are
unweighted means of the two per-class values.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .classifiers.model import as_label_array


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        """Same matrix with ``unrelated`` taken as the positive class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    per_class: dict = field(default_factory=dict)
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def table_row(self, *labels: str) -> str:
        cells = [f"{x:.4f}" for x in (self.f1, self.precision, self.recall, self.accuracy)]
        return "  ".join([*(f"{s:<20}" for s in labels), *(f"{c:>9}" for c in cells)])


TABLE_HEADER = ("F1-score", "Precision", "Recall", "Accuracy")


def format_table(rows: Sequence[tuple[tuple[str, ...], MetricsReport]], headers: Sequence[str] = ("Classifier", "Training")) -> str:
    """Aligned text table in F1 / precision / recall / accuracy column order."""
    head = "  ".join([*(f"{h:<20}" for h in headers), *(f"{h:>9}" for h in TABLE_HEADER)])
    lines = [head, "-" * len(head)]
    lines += [report.table_row(*labels) for labels, report in rows]
    return "\n".join(lines)


def confusion(preds: Sequence, truth: Sequence) -> ConfusionMatrix:
    p, t = as_label_array(preds), as_label_array(truth)
    if len(p) != len(t):
        raise ValueError(f"length mismatch: {len(p)} predictions vs {len(t)} labels")
    if len(p) == 0:
        raise ValueError("cannot tally an empty prediction list")
    return ConfusionMatrix(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
        tn=int(np.sum((p == 0) & (t == 0))),
    )


def _ratio(num: int, den: int) -> tuple[float, bool]:
    return (num / den, False) if den else (0.0, True)


def _class_metrics(tp: int, fp: int, fn: int) -> tuple[ClassMetrics, bool]:
    precision, d1 = _ratio(tp, tp + fp)
    recall, d2 = _ratio(tp, tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassMetrics(precision, recall, f1), d1 or d2


def macro_metrics(cm: ConfusionMatrix) -> MetricsReport:
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    rel, d_rel = _class_metrics(cm.tp, cm.fp, cm.fn)
    unrel, d_unrel = _class_metrics(cm.tn, cm.fn, cm.fp)
    return MetricsReport(
        precision=(rel.precision + unrel.precision) / 2,
        recall=(rel.recall + unrel.recall) / 2,
        f1=(rel.f1 + unrel.f1) / 2,
        accuracy=(cm.tp + cm.tn) / cm.total,
        per_class={"related": asdict(rel), "unrelated": asdict(unrel)},
        degenerate=d_rel or d_unrel,
    )


def mean_report(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Unweighted mean of several reports, field by field."""
    if not reports:
        raise ValueError("no reports to average")

    def avg(get):
        return float(np.mean([get(r) for r in reports]))

    per_class = {
        cls: {m: avg(lambda r: r.per_class[cls][m]) for m in ("precision", "recall", "f1")}
        for cls in ("related", "unrelated")
    }
    return MetricsReport(
        precision=avg(lambda r: r.precision),
        recall=avg(lambda r: r.recall),
        f1=avg(lambda r: r.f1),
        accuracy=avg(lambda r: r.accuracy),
        per_class=per_class,
        degenerate=any(r.degenerate for r in reports),
    )


def evaluate(preds: Sequence, truth: Sequence) -> MetricsReport:
    return macro_metrics(confusion(preds, truth))
