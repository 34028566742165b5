"""Scoring of binary predictions: confusion counts, precision, recall, F1.

The positive class is "relevant".  Zero denominators follow explicit
conventions (precision/recall fall back to 0, as does F1 when both are 0) so
reported numbers are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score_binary(labels: Sequence[int], preds: Sequence[int]) -> EvalReport:
    """Score predictions against labels for the positive (relevant) class."""
    if len(labels) == 0:
        raise ValueError("cannot score an empty prediction list")
    if len(labels) != len(preds):
        raise ValueError(f"{len(labels)} labels for {len(preds)} predictions")
    for value in (*labels, *preds):
        if value not in (0, 1):
            raise ValueError(f"labels and predictions must be 0 or 1, got {value!r}")
    tp = fp = fn = tn = 0
    for y, p in zip(labels, preds):
        if y == 1 and p == 1:
            tp += 1
        elif y == 0 and p == 1:
            fp += 1
        elif y == 1 and p == 0:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return EvalReport(tp, fp, fn, tn, precision, recall, _f1(precision, recall))


def macro_f1(labels: Sequence[int], preds: Sequence[int]) -> float:
    """Unweighted mean of the per-class F1 scores."""
    positive = score_binary(labels, preds)
    negative = score_binary([1 - y for y in labels], [1 - p for p in preds])
    return (positive.f1 + negative.f1) / 2.0


def format_report(report: EvalReport) -> str:
    """Plain-text table for terminal output."""
    return "\n".join(
        [
            "              predicted 1  predicted 0",
            f"  actual 1    {report.tp:>11d}  {report.fn:>11d}",
            f"  actual 0    {report.fp:>11d}  {report.tn:>11d}",
            f"  precision={report.precision:.4f} recall={report.recall:.4f} f1={report.f1:.4f}",
        ]
    )


def report_line(report: EvalReport, **extra: object) -> str:
    """Machine-readable single-line key=value record."""
    fields = {
        **{k: str(v) for k, v in extra.items()},
        "tp": str(report.tp),
        "fp": str(report.fp),
        "fn": str(report.fn),
        "tn": str(report.tn),
        "precision": format(report.precision, ".9g"),
        "recall": format(report.recall, ".9g"),
        "f1": format(report.f1, ".9g"),
    }
    return " ".join(f"{k}={v}" for k, v in fields.items())
