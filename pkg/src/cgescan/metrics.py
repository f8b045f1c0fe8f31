"""Confusion counts, threshold metrics and ROC/AUC."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc: tuple[tuple[float, float], ...]
    auc: float

    def to_json(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "accuracy": self.accuracy, "precision": self.precision,
            "recall": self.recall, "f1": self.f1,
            "roc": [[fpr, tpr] for fpr, tpr in self.roc],
            "auc": self.auc,
        }


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def roc_curve(pairs: list[tuple[float, int]]) -> tuple[tuple[float, float], ...]:
    """(fpr, tpr) points from the strictest threshold down to every score being positive."""
    pos = sum(1 for _, y in pairs if y)
    neg = len(pairs) - pos
    points = [(0.0, 0.0)]
    tp = fp = 0
    ordered = sorted(pairs, key=lambda p: -p[0])
    i = 0
    while i < len(ordered):
        t = ordered[i][0]
        while i < len(ordered) and ordered[i][0] == t:
            if ordered[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((_ratio(fp, neg), _ratio(tp, pos)))
    return tuple(points)


def trapezoid_auc(roc: Iterable[tuple[float, float]]) -> float:
    pts = list(roc)
    return sum((x1 - x0) * (y0 + y1) / 2.0 for (x0, y0), (x1, y1) in zip(pts, pts[1:]))


def compute_metrics(scores: Iterable[tuple[float, int]], threshold: float = 0.5) -> Metrics:
    """Metrics for ``(score, label)`` pairs; ratios with a zero denominator are 0.

    AUC is 0.5 when only one class is present, since no ranking exists.
    """
    pairs = [(float(s), int(y)) for s, y in scores]
    if not pairs:
        raise ValueError("compute_metrics needs at least one score")
    tp = sum(1 for s, y in pairs if y and s >= threshold)
    fp = sum(1 for s, y in pairs if not y and s >= threshold)
    fn = sum(1 for s, y in pairs if y and s < threshold)
    tn = len(pairs) - tp - fp - fn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    roc = roc_curve(pairs)
    both = 0 < tp + fn < len(pairs)
    auc = trapezoid_auc(roc) if both else 0.5
    return Metrics(tp, fp, tn, fn, (tp + tn) / len(pairs), precision, recall, f1, roc, auc)
