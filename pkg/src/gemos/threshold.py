"""Cutoff selection for open-set rejection.

Three routes to a ThresholdPolicy:

* ``grid_search_threshold``: maximize open-set macro-F1 over a quantile
  grid of the observed normalized scores (needs unknown samples).
* ``cross_validate_threshold``: stratified k-fold wrapper around the
  grid search; the final cutoff is the mean of the fold-best cutoffs.
* ``quantile_threshold``: unknown-free fallback placing the cutoff at a
  percentile of the training scores, globally or per class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from gemos.bank import ScoreRecord
from gemos.errors import DataFormatError, ValidationError
from gemos.metrics import open_set_f1
from gemos.models import dumps_deterministic

THRESHOLD_MODES = ("global_normalized", "per_class_raw")

DEFAULT_GRID_SIZE = 512
DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class ThresholdPolicy:
    """A rejection cutoff: one global value or one value per class.

    A global policy compares normalized scores against a scalar tau; a
    per-class policy compares raw scores against ``tau[predicted_label]``.
    """

    mode: str
    tau: float | tuple[float, ...]
    num_classes: int
    provenance: str = ""

    def check_shape(self) -> None:
        """Structural validity (mode, arity); sentinels allowed."""
        if self.mode not in THRESHOLD_MODES:
            raise ValidationError(
                f"unknown threshold mode {self.mode!r}; expected one of {THRESHOLD_MODES}"
            )
        if self.num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.mode == "global_normalized":
            if not np.isscalar(self.tau):
                raise ValidationError("global policy needs a scalar tau")
        else:
            taus = np.atleast_1d(np.asarray(self.tau, dtype=np.float64))
            if taus.shape != (self.num_classes,):
                raise ValidationError(
                    f"per-class policy needs {self.num_classes} cutoffs, got {taus.shape}"
                )

    def validated(self) -> "ThresholdPolicy":
        """Full validity for a policy meant to be persisted: finite cutoffs."""
        self.check_shape()
        taus = np.atleast_1d(np.asarray(self.tau, dtype=np.float64))
        if not np.all(np.isfinite(taus)):
            raise ValidationError(f"policy cutoffs must be finite, got {self.tau}")
        return self

    def to_dict(self) -> dict:
        self.validated()
        tau = float(self.tau) if np.isscalar(self.tau) else [float(v) for v in self.tau]
        return {
            "mode": self.mode,
            "tau": tau,
            "num_classes": int(self.num_classes),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdPolicy":
        try:
            tau = d["tau"]
            tau = tuple(float(v) for v in tau) if isinstance(tau, list) else float(tau)
            policy = cls(
                mode=str(d["mode"]),
                tau=tau,
                num_classes=int(d["num_classes"]),
                provenance=str(d.get("provenance", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"malformed threshold policy: {exc}") from exc
        return policy.validated()


@dataclass
class ThresholdSearchReport:
    """Cross-validation summary: per-fold cutoffs, held-out F1, aggregates."""

    folds: int
    fold_taus: list[float]
    fold_f1s: list[float]  # held-out macro-F1 per fold
    mean_tau: float
    std_tau: float
    mean_f1: float
    std_f1: float
    final_tau: float       # mean of fold-best cutoffs
    grid_description: str
    num_classes: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "folds": int(self.folds),
            "fold_taus": [float(v) for v in self.fold_taus],
            "fold_f1s": [float(v) for v in self.fold_f1s],
            "mean_tau": float(self.mean_tau),
            "std_tau": float(self.std_tau),
            "mean_f1": float(self.mean_f1),
            "std_f1": float(self.std_f1),
            "final_tau": float(self.final_tau),
            "grid_description": self.grid_description,
            "num_classes": int(self.num_classes),
            "seed": int(self.seed),
        }


def _infer_num_classes(records: Sequence[ScoreRecord]) -> int:
    top = 0
    for r in records:
        top = max(top, r.predicted_label, r.true_label)
    return top + 1


def _arrays(
    records: Sequence[ScoreRecord], num_classes: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scores = np.array([r.norm_score for r in records], dtype=np.float64)
    preds = np.array([r.predicted_label for r in records], dtype=np.int64)
    truths = np.array(
        [num_classes if r.true_label < 0 else r.true_label for r in records],
        dtype=np.int64,
    )
    return scores, preds, truths


def _f1_at(
    tau: float, scores: np.ndarray, preds: np.ndarray, truths: np.ndarray, num_classes: int
) -> float:
    open_labels = np.where(scores >= tau, preds, num_classes)
    macro, _ = open_set_f1(open_labels, truths, num_classes)
    return macro


def grid_search_threshold(
    records: Sequence[ScoreRecord],
    grid_size: int = DEFAULT_GRID_SIZE,
    num_classes: int | None = None,
) -> tuple[float, float]:
    """Best global cutoff on normalized scores by open-set macro-F1.

    The candidate grid is every distinct score when there are at most
    ``grid_size`` of them (which makes the search exhaustive), otherwise
    ``grid_size`` empirical quantiles; -inf and +inf sentinels are always
    added so accept-all and reject-all are both considered.  Ties are
    broken toward the larger cutoff (rejecting more).

    Returns:
        (tau, f1) at the maximum.  tau can be +inf when rejecting
        everything is strictly best; it is never -inf because the
        smallest score produces the same labeling and wins the tie.

    Raises:
        ValidationError: no unknown (or no known) samples among the
            records, or a non-positive grid size.
    """
    if grid_size < 1:
        raise ValidationError(f"grid_size must be >= 1, got {grid_size}")
    if not records:
        raise ValidationError("no records to search over")
    n_unknown = sum(1 for r in records if r.true_label < 0)
    if n_unknown == 0:
        raise ValidationError(
            "threshold search needs unknown samples (true_label -1): "
            "F1 for the unknown class is undefined without positives"
        )
    if n_unknown == len(records):
        raise ValidationError("threshold search needs at least one known sample")

    if num_classes is None:
        num_classes = _infer_num_classes(records)
    scores, preds, truths = _arrays(records, num_classes)

    distinct = np.unique(scores)
    if distinct.size > grid_size:
        quantiles = np.linspace(0.0, 1.0, grid_size)
        candidates = np.unique(np.quantile(scores, quantiles, method="higher"))
    else:
        candidates = distinct
    grid = np.concatenate([[-np.inf], candidates, [np.inf]])

    best_tau = -np.inf
    best_f1 = -1.0
    for tau in grid:  # ascending, so >= prefers the larger cutoff on ties
        f1 = _f1_at(float(tau), scores, preds, truths, num_classes)
        if f1 >= best_f1:
            best_f1 = f1
            best_tau = float(tau)
    return best_tau, best_f1


def _finite_tau(tau: float, train_scores: np.ndarray) -> float:
    # a +inf winner means "reject everything"; the nearest float above
    # the largest observed score produces the same labeling, finitely
    if np.isposinf(tau):
        return float(np.nextafter(float(train_scores.max()), np.inf))
    return tau


def cross_validate_threshold(
    records: Sequence[ScoreRecord],
    folds: int = DEFAULT_FOLDS,
    grid_size: int = DEFAULT_GRID_SIZE,
    seed: int = 42,
    num_classes: int | None = None,
) -> ThresholdSearchReport:
    """Stratified k-fold threshold selection.

    Records are canonically sorted by sample_id, then known and unknown
    samples are independently shuffled (fixed seed) and dealt round
    robin into folds, so every fold holds both kinds.  Each fold's
    cutoff is fitted on the other folds and assessed on the held-out
    fold; the final cutoff is the mean of the fold cutoffs (+inf
    winners are first replaced by the nearest finite equivalent).

    Raises:
        ValidationError: fewer than 2 folds, or too few known/unknown
            samples to stratify.
    """
    if folds < 2:
        raise ValidationError(f"need at least 2 folds, got {folds}")
    records = sorted(
        records, key=lambda r: (r.sample_id, r.true_label, r.predicted_label, r.raw_score)
    )
    if num_classes is None:
        num_classes = _infer_num_classes(records)

    known_idx = [i for i, r in enumerate(records) if r.true_label >= 0]
    unknown_idx = [i for i, r in enumerate(records) if r.true_label < 0]
    if len(known_idx) < folds or len(unknown_idx) < folds:
        raise ValidationError(
            f"stratification infeasible: {folds} folds need at least {folds} known "
            f"and {folds} unknown samples, got {len(known_idx)} and {len(unknown_idx)}"
        )

    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(records), dtype=np.int64)
    for group in (known_idx, unknown_idx):
        order = rng.permutation(len(group))
        for position, member in enumerate(order):
            fold_of[group[member]] = position % folds

    fold_taus: list[float] = []
    fold_f1s: list[float] = []
    for f in range(folds):
        train = [r for r, g in zip(records, fold_of) if g != f]
        held = [r for r, g in zip(records, fold_of) if g == f]
        tau, _ = grid_search_threshold(train, grid_size, num_classes)
        tau = _finite_tau(tau, np.array([r.norm_score for r in train]))
        scores, preds, truths = _arrays(held, num_classes)
        fold_f1s.append(_f1_at(tau, scores, preds, truths, num_classes))
        fold_taus.append(tau)

    taus = np.asarray(fold_taus)
    f1s = np.asarray(fold_f1s)
    return ThresholdSearchReport(
        folds=folds,
        fold_taus=fold_taus,
        fold_f1s=fold_f1s,
        mean_tau=float(taus.mean()),
        std_tau=float(taus.std()),
        mean_f1=float(f1s.mean()),
        std_f1=float(f1s.std()),
        final_tau=float(taus.mean()),
        grid_description=f"{grid_size} empirical quantiles plus -inf/+inf sentinels",
        num_classes=num_classes,
        seed=seed,
    )


def policy_from_report(report: ThresholdSearchReport) -> ThresholdPolicy:
    """Wrap a cross-validation result as a global policy."""
    return ThresholdPolicy(
        mode="global_normalized",
        tau=report.final_tau,
        num_classes=report.num_classes,
        provenance=(
            f"cross-validated grid search: folds={report.folds}, "
            f"{report.grid_description}, seed={report.seed}, metric=macro_f1"
        ),
    ).validated()


def quantile_threshold(
    records: Sequence[ScoreRecord],
    percentile: float = 5.0,
    mode: str = "global_normalized",
    num_classes: int | None = None,
) -> ThresholdPolicy:
    """Unknown-free cutoff at a low percentile of the training scores.

    Pass the records produced by scoring the training set with its own
    bank.  With the default percentile 5, roughly 95% of training
    samples stay accepted.  Global mode cuts normalized scores; per-class
    mode cuts each class's raw scores (rows grouped by predicted label).

    Raises:
        ValidationError: bad percentile/mode, no labeled rows, or (per
            class mode) a class with no scored training rows.
    """
    if not 0.0 <= percentile <= 100.0:
        raise ValidationError(f"percentile must be in [0, 100], got {percentile}")
    if mode not in THRESHOLD_MODES:
        raise ValidationError(f"unknown threshold mode {mode!r}")
    labeled = [r for r in records if r.true_label >= 0]
    if not labeled:
        raise ValidationError("quantile threshold needs labeled training records")
    if num_classes is None:
        num_classes = _infer_num_classes(labeled)

    if mode == "global_normalized":
        tau: float | tuple[float, ...] = float(
            np.percentile([r.norm_score for r in labeled], percentile)
        )
    else:
        taus = []
        for c in range(num_classes):
            class_scores = [r.raw_score for r in labeled if r.predicted_label == c]
            if not class_scores:
                raise ValidationError(
                    f"class {c} has no scored training rows; cannot place its cutoff"
                )
            taus.append(float(np.percentile(class_scores, percentile)))
        tau = tuple(taus)
    return ThresholdPolicy(
        mode=mode,
        tau=tau,
        num_classes=num_classes,
        provenance=f"quantile: percentile={percentile}, mode={mode}",
    ).validated()


def save_policy(
    policy: ThresholdPolicy,
    path: str | Path,
    report: ThresholdSearchReport | None = None,
) -> None:
    """Write a policy (and optionally its search report) as deterministic JSON."""
    payload = {
        "format": "gemos-threshold",
        "version": 1,
        "policy": policy.to_dict(),
        "report": report.to_dict() if report is not None else None,
    }
    Path(path).write_text(dumps_deterministic(payload) + "\n")


def load_policy(path: str | Path) -> tuple[ThresholdPolicy, dict | None]:
    """Read a policy file; returns the policy and the report dict if present."""
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    if "policy" in d:
        return ThresholdPolicy.from_dict(d["policy"]), d.get("report")
    return ThresholdPolicy.from_dict(d), None
