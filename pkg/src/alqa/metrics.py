"""Confusion counting and the recall-weighted F2 metric.

DEFECTIVE is the positive class: a missed defect (false negative) is the
expensive mistake, so evaluation weights recall over precision via F-beta
at beta=2.
"""

from __future__ import annotations

from dataclasses import dataclass

from alqa.errors import ContractError, UndefinedMetricError
from alqa.types import Label


@dataclass(frozen=True)
class MetricReport:
    """Confusion counts plus precision/recall/F2 for one evaluation.

    precision is None when tp+fp == 0 and recall is None when tp+fn == 0
    (undefined ratios). F2 is 0.0 when tp == 0 but errors exist.
    """

    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f2: float


def fbeta(precision: float, recall: float, beta: float) -> float:
    """Generic F-beta from precision and recall."""
    if precision == 0 and recall == 0:
        return 0.0
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


def f2_from_counts(tp: int, fp: int, fn: int, tn: int = 0) -> MetricReport:
    """Build a MetricReport from confusion counts; F2 = 5PR / (4P + R)."""
    for name, v in (("tp", tp), ("fp", fp), ("fn", fn), ("tn", tn)):
        if v < 0:
            raise ContractError(f"{name} must be >= 0, got {v}")
    if tp == 0 and fp == 0 and fn == 0:
        raise UndefinedMetricError("no positive predictions or positives present")

    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if tp == 0:
        f2 = 0.0
    else:
        f2 = 5.0 * precision * recall / (4.0 * precision + recall)
    return MetricReport(tp=tp, fp=fp, fn=fn, tn=tn, precision=precision, recall=recall, f2=f2)


def confusion_counts(truth: list[Label], predicted: list[Label]) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with DEFECTIVE as positive."""
    if len(truth) != len(predicted):
        raise ContractError(f"length mismatch: {len(truth)} vs {len(predicted)}")
    tp = fp = fn = tn = 0
    for t, p in zip(truth, predicted):
        if p is Label.DEFECTIVE:
            if t is Label.DEFECTIVE:
                tp += 1
            else:
                fp += 1
        else:
            if t is Label.DEFECTIVE:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def evaluate_labels(truth: list[Label], predicted: list[Label]) -> MetricReport:
    return f2_from_counts(*confusion_counts(truth, predicted))
