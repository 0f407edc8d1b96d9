"""Per-class scorer bank: fit, route-by-prediction scoring, open-set labeling.

One shallow generative model is fitted per known class, on the feature
vectors of training samples the backbone predicted correctly.  At
inference a sample is scored only by its predicted class's model; the
raw score is standardized against that class's own training scores so a
single global cutoff is meaningful across classes.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from gemos.dataset import FeatureDataset
from gemos.errors import DataFormatError, FitError, ValidationError
from gemos.models import (
    GmmModel,
    ScorerConfig,
    dumps_deterministic,
    fit_model,
    model_from_dict,
    model_to_dict,
    score_many,
)
from gemos.models.serialize import AnyModel

if TYPE_CHECKING:
    from gemos.threshold import ThresholdPolicy

# Smallest standard deviation used for score normalization.
_STD_FLOOR = 1e-12

SCORES_CSV_HEADER = ("sample_id", "true_label", "predicted_label", "raw_score", "norm_score")


@dataclass(frozen=True)
class ScoreRecord:
    """One sample's routed score: raw scale and per-class standardized."""

    sample_id: int
    true_label: int       # -1 marks a sample from an unknown class
    predicted_label: int
    raw_score: float
    norm_score: float


@dataclass
class ModelBank:
    """One fitted scorer per known class plus its normalization statistics."""

    num_classes: int
    scorers: list[AnyModel]
    norm_means: np.ndarray  # (C,) mean of fit-time raw scores per class
    norm_stds: np.ndarray   # (C,) std of the same, floored at 1e-12
    config: ScorerConfig
    min_class_samples: int

    @property
    def dim(self) -> int:
        first = self.scorers[0]
        return int(first.dim)


def default_min_class_samples(cfg: ScorerConfig) -> int:
    """Fewest correctly predicted rows per class a given scorer kind needs.

    Below these counts the fits are degenerate: a mixture needs a couple
    of points per component, a subspace needs points beyond its rank,
    and a neighborhood density needs more points than neighbors.
    """
    if cfg.kind == "gmm":
        return max(2 * cfg.num_components, 8)
    if cfg.kind == "pca":
        return max(2 * cfg.num_components, 8)
    if cfg.kind == "lof":
        return max(cfg.k_neighbors + 1, 8)
    return 8  # iforest


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get("GEMOS_THREADS", "").strip()
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValidationError(f"GEMOS_THREADS must be an integer, got {raw!r}") from exc
    return max(1, min(cap, n_tasks))


def fit_bank(
    train: FeatureDataset,
    cfg: ScorerConfig,
    min_class_samples: int | None = None,
) -> ModelBank:
    """Fit one scorer per class on its correctly predicted training rows.

    Rows with ``predicted_label != true_label`` are excluded from
    fitting (rows with the unknown true-label sentinel are therefore
    never used).  Classes may be fitted in parallel when the
    GEMOS_THREADS environment variable allows more than one worker; the
    result does not depend on the worker count.

    Args:
        train: labeled feature dataset.
        cfg: scorer kind and hyperparameters, shared by every class.
        min_class_samples: override for the per-kind default minimum.

    Raises:
        FitError: some class retains fewer correctly predicted rows
            than the minimum (the error names the class).
    """
    cfg = cfg.validated()
    min_needed = default_min_class_samples(cfg) if min_class_samples is None else int(min_class_samples)
    num_classes = train.num_classes

    partitions: list[np.ndarray] = []
    for c in range(num_classes):
        mask = (train.true_labels == c) & (train.predicted_labels == c)
        rows = train.features[mask]
        if rows.shape[0] < min_needed:
            raise FitError(
                f"class {c} has {rows.shape[0]} correctly predicted training "
                f"samples; {cfg.kind} needs at least {min_needed}"
            )
        partitions.append(np.asarray(rows, dtype=np.float64))

    workers = _worker_count(num_classes)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scorers = list(pool.map(lambda X: fit_model(X, cfg), partitions))
    else:
        scorers = [fit_model(X, cfg) for X in partitions]

    norm_means = np.empty(num_classes, dtype=np.float64)
    norm_stds = np.empty(num_classes, dtype=np.float64)
    for c in range(num_classes):
        fit_scores = score_many(scorers[c], partitions[c])
        norm_means[c] = float(np.mean(fit_scores))
        norm_stds[c] = max(float(np.std(fit_scores)), _STD_FLOOR)

    return ModelBank(
        num_classes=num_classes,
        scorers=scorers,
        norm_means=norm_means,
        norm_stds=norm_stds,
        config=cfg,
        min_class_samples=min_needed,
    )


def score_dataset(bank: ModelBank, data: FeatureDataset) -> list[ScoreRecord]:
    """Score every sample under its predicted class's model.

    True labels pass through untouched (-1 allowed).  Records are
    returned in ascending sample_id order regardless of input order.

    Raises:
        ValidationError: feature dimension mismatch, or a predicted
            label outside the bank's class range.
    """
    if data.dim != bank.dim:
        raise ValidationError(
            f"feature dimension {data.dim} does not match bank dimension {bank.dim}"
        )
    too_big = np.flatnonzero(data.predicted_labels >= bank.num_classes)
    if too_big.size:
        raise ValidationError(
            f"sample {int(data.sample_ids[too_big[0]])} has predicted label "
            f"{int(data.predicted_labels[too_big[0]])}, bank covers classes "
            f"0..{bank.num_classes - 1}"
        )

    raw = np.empty(len(data), dtype=np.float64)
    norm = np.empty(len(data), dtype=np.float64)
    groups = [np.flatnonzero(data.predicted_labels == c) for c in range(bank.num_classes)]

    def score_group(c: int) -> None:
        idx = groups[c]
        if idx.size == 0:
            return
        scores = score_many(bank.scorers[c], np.asarray(data.features[idx], dtype=np.float64))
        raw[idx] = scores
        norm[idx] = (scores - bank.norm_means[c]) / bank.norm_stds[c]

    workers = _worker_count(bank.num_classes)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(score_group, range(bank.num_classes)))
    else:
        for c in range(bank.num_classes):
            score_group(c)

    order = np.argsort(data.sample_ids, kind="stable")
    return [
        ScoreRecord(
            sample_id=int(data.sample_ids[i]),
            true_label=int(data.true_labels[i]),
            predicted_label=int(data.predicted_labels[i]),
            raw_score=float(raw[i]),
            norm_score=float(norm[i]),
        )
        for i in order
    ]


def classify_open_set(
    records: Sequence[ScoreRecord], policy: "ThresholdPolicy"
) -> list[tuple[int, int]]:
    """Apply a threshold policy: keep the predicted label or reject to UNKNOWN.

    A sample keeps its predicted label when its comparison score
    (normalized under a global policy, raw under a per-class policy) is
    >= the applicable cutoff, and is labeled ``policy.num_classes``
    otherwise.  Sentinel cutoffs are honored: -inf accepts everything,
    +inf rejects everything.
    """
    policy.check_shape()
    unknown = policy.num_classes
    out: list[tuple[int, int]] = []
    if policy.mode == "global_normalized":
        tau = float(policy.tau)
        for r in records:
            keep = r.norm_score >= tau
            out.append((r.sample_id, r.predicted_label if keep else unknown))
    else:
        taus = np.asarray(policy.tau, dtype=np.float64)
        for r in records:
            if not 0 <= r.predicted_label < unknown:
                raise ValidationError(
                    f"sample {r.sample_id} has predicted label {r.predicted_label}, "
                    f"policy covers classes 0..{unknown - 1}"
                )
            keep = r.raw_score >= taus[r.predicted_label]
            out.append((r.sample_id, r.predicted_label if keep else unknown))
    return out


def comparison_scores(records: Sequence[ScoreRecord], mode: str) -> np.ndarray:
    """The score column a policy of the given mode compares against tau."""
    if mode == "global_normalized":
        return np.array([r.norm_score for r in records], dtype=np.float64)
    if mode == "per_class_raw":
        return np.array([r.raw_score for r in records], dtype=np.float64)
    raise ValidationError(f"unknown threshold mode {mode!r}")


# ---------------------------------------------------------------------------
# persistence


def bank_to_dict(bank: ModelBank) -> dict:
    return {
        "format": "gemos-bank",
        "version": 1,
        "num_classes": int(bank.num_classes),
        "kind": bank.config.kind,
        "config": bank.config.to_dict(),
        "min_class_samples": int(bank.min_class_samples),
        "norm_stats": {
            "means": np.asarray(bank.norm_means, dtype=np.float64).tolist(),
            "stds": np.asarray(bank.norm_stds, dtype=np.float64).tolist(),
        },
        "scorers": [model_to_dict(m, bank.config) for m in bank.scorers],
    }


def bank_from_dict(d: dict) -> ModelBank:
    try:
        if d.get("format") != "gemos-bank":
            raise DataFormatError("not a model bank file (missing format tag)")
        if int(d["version"]) != 1:
            raise DataFormatError(f"unsupported bank version {d['version']}")
        num_classes = int(d["num_classes"])
        cfg = ScorerConfig.from_dict(d["config"])
        scorers = [model_from_dict(s)[0] for s in d["scorers"]]
        means = np.asarray(d["norm_stats"]["means"], dtype=np.float64)
        stds = np.asarray(d["norm_stats"]["stds"], dtype=np.float64)
        min_cs = int(d["min_class_samples"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed bank record: {exc}") from exc
    if len(scorers) != num_classes or means.shape != (num_classes,) or stds.shape != (num_classes,):
        raise DataFormatError(
            f"bank claims {num_classes} classes but holds {len(scorers)} scorers "
            f"and {means.shape[0]}/{stds.shape[0]} normalization entries"
        )
    if np.any(stds <= 0):
        raise DataFormatError("bank normalization stds must be positive")
    return ModelBank(
        num_classes=num_classes,
        scorers=scorers,
        norm_means=means,
        norm_stds=stds,
        config=cfg,
        min_class_samples=min_cs,
    )


def save_bank(bank: ModelBank, path: str | Path) -> None:
    """Write the bank as deterministic JSON (same bank -> same bytes)."""
    Path(path).write_text(dumps_deterministic(bank_to_dict(bank)) + "\n")


def load_bank(path: str | Path) -> ModelBank:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: not valid JSON: {exc}") from exc
    return bank_from_dict(d)


def write_scores_csv(records: Sequence[ScoreRecord], path: str | Path) -> None:
    """Write score records with 17-significant-digit score columns."""
    lines = [",".join(SCORES_CSV_HEADER)]
    for r in records:
        lines.append(
            f"{r.sample_id},{r.true_label},{r.predicted_label},"
            f"{format(r.raw_score, '.17g')},{format(r.norm_score, '.17g')}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_scores_csv(path: str | Path) -> list[ScoreRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty scores file") from None
        if tuple(header) != SCORES_CSV_HEADER:
            raise DataFormatError(
                f"{path}: bad header {header!r}, expected {','.join(SCORES_CSV_HEADER)}"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataFormatError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            try:
                records.append(
                    ScoreRecord(
                        sample_id=int(row[0]),
                        true_label=int(row[1]),
                        predicted_label=int(row[2]),
                        raw_score=float(row[3]),
                        norm_score=float(row[4]),
                    )
                )
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return records
