"""Evaluation metrics computed straight from a confusion matrix.

The confusion matrix is row = actual class, column = predicted class.
Any 0/0 ratio is defined as 0 rather than NaN so degenerate predictions
still produce a usable report.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .validation import check_label_array


class Averaging(Enum):
    MACRO = "macro"
    POSITIVE_CLASS = "positive-class"


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def confusion_matrix(actual, predicted, n_classes: int = 2) -> np.ndarray:
    """Count (actual, predicted) pairs into an n_classes x n_classes grid."""
    if n_classes < 2:
        raise ValueError(f"need at least two classes, got {n_classes}")
    actual = check_label_array(actual, n_classes)
    predicted = check_label_array(predicted, n_classes)
    if actual.shape != predicted.shape:
        raise ValueError(
            f"label arrays differ in length: {actual.shape[0]} vs {predicted.shape[0]}"
        )
    counts = np.bincount(
        actual * n_classes + predicted, minlength=n_classes * n_classes
    )
    return counts.reshape(n_classes, n_classes).astype(np.int64)


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Precision, recall, F1, and Dice for one evaluation.

    f1 is always the harmonic mean of the reported precision and recall.
    dice is computed on the positive class regardless of averaging, which
    makes it identical to the positive class F1.
    """

    precision: float
    recall: float
    f1: float
    dice: float
    confusion: np.ndarray
    averaging: Averaging
    positive_class: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "dice": self.dice,
            "averaging": self.averaging.value,
            "positive_class": self.positive_class,
            "confusion": self.confusion.tolist(),
        }

    def csv_row(self, label: str) -> str:
        return ",".join(
            [label]
            + [repr(v) for v in (self.precision, self.recall, self.f1, self.dice)]
        )


def compute_metrics(
    confusion,
    positive_class: int = 1,
    averaging: Averaging = Averaging.MACRO,
) -> MetricsReport:
    """Summarize a confusion matrix.

    Macro averaging takes the unweighted mean of per-class precision and
    recall; positive-class averaging reports the positive class alone.
    """
    confusion = np.asarray(confusion)
    if confusion.ndim != 2 or confusion.shape[0] != confusion.shape[1]:
        raise ValueError(f"confusion matrix must be square, got shape {confusion.shape}")
    if confusion.shape[0] < 2:
        raise ValueError("confusion matrix needs at least two classes")
    if not np.issubdtype(confusion.dtype, np.integer):
        raise ValueError(f"confusion matrix must hold integer counts, got {confusion.dtype}")
    if (confusion < 0).any():
        raise ValueError("confusion matrix counts must be non-negative")
    if confusion.sum() == 0:
        raise ValueError("confusion matrix is empty")
    averaging = Averaging(averaging)
    n = confusion.shape[0]
    if not 0 <= positive_class < n:
        raise ValueError(
            f"positive_class must lie in [0, {n}), got {positive_class}"
        )

    tp = np.diag(confusion).astype(np.float64)
    fp = confusion.sum(axis=0).astype(np.float64) - tp
    fn = confusion.sum(axis=1).astype(np.float64) - tp
    per_precision = [_safe_div(tp[c], tp[c] + fp[c]) for c in range(n)]
    per_recall = [_safe_div(tp[c], tp[c] + fn[c]) for c in range(n)]

    if averaging is Averaging.MACRO:
        precision = float(np.mean(per_precision))
        recall = float(np.mean(per_recall))
    else:
        precision = per_precision[positive_class]
        recall = per_recall[positive_class]
    f1 = _safe_div(2.0 * precision * recall, precision + recall)

    p = positive_class
    dice = _safe_div(2.0 * tp[p], 2.0 * tp[p] + fp[p] + fn[p])

    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        dice=dice,
        confusion=confusion.astype(np.int64).copy(),
        averaging=averaging,
        positive_class=int(positive_class),
    )


def evaluate_predictions(
    actual,
    predicted,
    n_classes: int = 2,
    positive_class: int = 1,
    averaging: Averaging = Averaging.MACRO,
) -> MetricsReport:
    """Convenience wrapper: confusion matrix plus metrics in one call."""
    grid = confusion_matrix(actual, predicted, n_classes)
    return compute_metrics(grid, positive_class=positive_class, averaging=averaging)
