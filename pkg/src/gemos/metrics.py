"""Open-set evaluation: binary AUC, grouped-unknown F1, KKC accuracy.

The unknown side is treated as one extra class: true labels of -1 map
to class index C, and rejected predictions land on the same index, so
F1 is computed over C+1 classes.  AUC is threshold independent and uses
the rank statistic, so ties contribute half wins exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.stats import rankdata

from gemos.bank import ScoreRecord, classify_open_set, comparison_scores
from gemos.errors import ValidationError

if TYPE_CHECKING:
    from gemos.threshold import ThresholdPolicy


def binary_auc(scores: Sequence[float], is_known: Sequence[bool]) -> float:
    """Probability that a random known sample outscores a random unknown one.

    Computed as the Mann-Whitney rank statistic with mid-rank tie
    handling, which equals pair counting with ties worth one half.

    Raises:
        ValidationError: length mismatch, or only one side present.
    """
    s = np.asarray(scores, dtype=np.float64)
    known = np.asarray(is_known, dtype=bool)
    if s.shape != known.shape or s.ndim != 1:
        raise ValidationError(
            f"scores and flags must be equal-length vectors, got {s.shape} and {known.shape}"
        )
    n_known = int(known.sum())
    n_unknown = int(known.size - n_known)
    if n_known == 0 or n_unknown == 0:
        raise ValidationError(
            f"AUC needs both sides, got {n_known} known and {n_unknown} unknown"
        )
    ranks = rankdata(s)
    rank_sum = float(ranks[known].sum())
    return (rank_sum - n_known * (n_known + 1) / 2.0) / (n_known * n_unknown)


def _checked_labels(
    predictions: Sequence[int], truths: Sequence[int], num_classes: int
) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(truths, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise ValidationError(
            f"predictions and truths must be equal-length vectors, got {p.shape} and {t.shape}"
        )
    if p.size == 0:
        raise ValidationError("no samples to evaluate")
    t = np.where(t == -1, num_classes, t)  # unknown sentinel -> extra class
    for name, arr in (("prediction", p), ("truth", t)):
        bad = np.flatnonzero((arr < 0) | (arr > num_classes))
        if bad.size:
            raise ValidationError(
                f"{name} at position {bad[0]} is {arr[bad[0]]}, outside [0, {num_classes}]"
            )
    return p, t


def open_set_f1(
    predictions: Sequence[int], truths: Sequence[int], num_classes: int
) -> tuple[float, np.ndarray]:
    """Macro-F1 over the C known classes plus the grouped unknown class.

    A class with zero support in both truths and predictions has no
    defined F1 (NaN in the per-class vector) and is excluded from the
    macro mean; a class that appears but collects no true positives
    contributes F1 = 0.

    Returns:
        (macro_f1, per_class_f1) with per_class_f1 of length C + 1.
    """
    p, t = _checked_labels(predictions, truths, num_classes)
    n_bins = num_classes + 1
    support = np.bincount(t, minlength=n_bins).astype(np.float64)
    predicted = np.bincount(p, minlength=n_bins).astype(np.float64)
    tp = np.bincount(t[p == t], minlength=n_bins).astype(np.float64)

    per_class = np.full(n_bins, np.nan, dtype=np.float64)
    defined = (support > 0) | (predicted > 0)
    per_class[defined] = 0.0
    scoring = defined & (tp > 0)
    precision = tp[scoring] / predicted[scoring]
    recall = tp[scoring] / support[scoring]
    per_class[scoring] = 2.0 * precision * recall / (precision + recall)

    if not defined.any():
        raise ValidationError("no class has support or predictions")
    macro = float(per_class[defined].mean())
    return macro, per_class


def micro_f1(
    predictions: Sequence[int], truths: Sequence[int], num_classes: int
) -> float:
    """Micro-averaged F1 over the C+1 classes (pooled counts)."""
    p, t = _checked_labels(predictions, truths, num_classes)
    n_bins = num_classes + 1
    support = np.bincount(t, minlength=n_bins).astype(np.float64)
    predicted = np.bincount(p, minlength=n_bins).astype(np.float64)
    tp = np.bincount(t[p == t], minlength=n_bins).astype(np.float64)
    denom = predicted.sum() + support.sum()
    return float(2.0 * tp.sum() / denom) if denom > 0 else 0.0


def roc_points(scores: Sequence[float], is_known: Sequence[bool]) -> np.ndarray:
    """(score, fpr, tpr) rows at each distinct score, descending.

    TPR = fraction of known samples at or above the score, FPR the same
    over unknown samples.
    """
    s = np.asarray(scores, dtype=np.float64)
    known = np.asarray(is_known, dtype=bool)
    if s.shape != known.shape or s.ndim != 1:
        raise ValidationError("scores and flags must be equal-length vectors")
    known_sorted = np.sort(s[known])
    unknown_sorted = np.sort(s[~known])
    if known_sorted.size == 0 or unknown_sorted.size == 0:
        raise ValidationError("ROC needs both known and unknown samples")
    cuts = np.unique(s)[::-1]
    tpr = (known_sorted.size - np.searchsorted(known_sorted, cuts, side="left")) / known_sorted.size
    fpr = (unknown_sorted.size - np.searchsorted(unknown_sorted, cuts, side="left")) / unknown_sorted.size
    return np.column_stack([cuts, fpr, tpr])


@dataclass
class EvalReport:
    """Everything one threshold policy produces on one scored dataset."""

    auc: float
    macro_f1: float
    micro_f1: float
    per_class_f1: np.ndarray  # length C+1, NaN = undefined
    kkc_accuracy: float
    counts: dict
    threshold_used: dict
    num_classes: int

    def to_dict(self) -> dict:
        per_class = [
            None if np.isnan(v) else float(v) for v in np.asarray(self.per_class_f1)
        ]
        return {
            "auc": float(self.auc),
            "macro_f1": float(self.macro_f1),
            "micro_f1": float(self.micro_f1),
            "per_class_f1": per_class,
            "kkc_accuracy": float(self.kkc_accuracy),
            "counts": self.counts,
            "threshold_used": self.threshold_used,
            "num_classes": int(self.num_classes),
        }


def evaluate(records: Sequence[ScoreRecord], policy: "ThresholdPolicy") -> EvalReport:
    """Apply a policy and compute the full metric set.

    AUC is computed on the policy's comparison scores (normalized for a
    global policy, raw for a per-class policy) and does not depend on
    the cutoff itself.
    """
    if not records:
        raise ValidationError("no records to evaluate")
    num_classes = policy.num_classes
    scores = comparison_scores(records, policy.mode)
    is_known = np.array([r.true_label >= 0 for r in records], dtype=bool)
    auc = binary_auc(scores, is_known)

    open_labels = np.array([label for _, label in classify_open_set(records, policy)])
    truths = np.array([r.true_label for r in records], dtype=np.int64)
    macro, per_class = open_set_f1(open_labels, truths, num_classes)
    micro = micro_f1(open_labels, truths, num_classes)

    kkc_accuracy = (
        float(np.mean(open_labels[is_known] == truths[is_known]))
        if is_known.any()
        else float("nan")
    )

    mapped = np.where(truths == -1, num_classes, truths)
    n_bins = num_classes + 1
    counts = {
        "support": np.bincount(mapped, minlength=n_bins).tolist(),
        "predicted": np.bincount(open_labels, minlength=n_bins).tolist(),
        "true_positive": np.bincount(
            mapped[open_labels == mapped], minlength=n_bins
        ).tolist(),
        "total": int(len(records)),
        "known": int(is_known.sum()),
        "unknown": int(len(records) - is_known.sum()),
    }
    tau = policy.tau
    threshold_used = {
        "mode": policy.mode,
        "tau": float(tau) if np.isscalar(tau) else [float(v) for v in tau],
    }
    return EvalReport(
        auc=auc,
        macro_f1=macro,
        micro_f1=micro,
        per_class_f1=per_class,
        kkc_accuracy=kkc_accuracy,
        counts=counts,
        threshold_used=threshold_used,
        num_classes=num_classes,
    )
