#!/usr/bin/env python3
"""Regenerate the committed test fixtures in tests/fixtures/.

Produces two synthetic GMF feature files (a fully labeled training set
and an evaluation mixture with unknown samples), a handcrafted 30-row
scores CSV, and a golden evaluation report for that CSV computed by the
independent oracles in tests/oracles.py — never by the library itself.

Deterministic: running it twice writes identical bytes.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO))

from gemos import FeatureDataset, ManifestInfo, write_dataset  # noqa: E402
from gemos.bank import ScoreRecord, write_scores_csv  # noqa: E402
from tests.oracles import eval_report_reference  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"

DIM = 20
NUM_CLASSES = 3
SIGMA = 1.0
GOLDEN_TAU = 0.25


def class_center(c: int) -> np.ndarray:
    center = np.zeros(DIM)
    center[np.arange(DIM) % NUM_CLASSES == c] = 6.0
    return center


UUC_CENTER = np.full(DIM, 2.0)


def make_train(rng: np.random.Generator) -> FeatureDataset:
    feats, true, pred = [], [], []
    for c in range(NUM_CLASSES):
        correct = class_center(c) + rng.normal(0.0, SIGMA, (60, DIM))
        feats.append(correct)
        true += [c] * 60
        pred += [c] * 60
        # a few backbone mistakes: excluded from fitting, still valid rows
        wrong = class_center(c) + rng.normal(0.0, SIGMA, (5, DIM))
        feats.append(wrong)
        true += [c] * 5
        pred += [(c + 1) % NUM_CLASSES] * 5
    return FeatureDataset(
        dim=DIM,
        num_classes=NUM_CLASSES,
        features=np.vstack(feats),
        true_labels=true,
        predicted_labels=pred,
        manifest=ManifestInfo(source_dataset="synthetic-fixture-train"),
    )


def make_eval(rng: np.random.Generator) -> FeatureDataset:
    feats, true, pred = [], [], []
    for c in range(NUM_CLASSES):
        known = class_center(c) + rng.normal(0.0, SIGMA, (30, DIM))
        feats.append(known)
        true += [c] * 30
        pred += [c] * 28 + [(c + 1) % NUM_CLASSES] * 2
    unknown = UUC_CENTER + rng.normal(0.0, SIGMA, (60, DIM))
    centers = np.stack([class_center(c) for c in range(NUM_CLASSES)])
    nearest = np.argmin(
        ((unknown[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), axis=1
    )
    feats.append(unknown)
    true += [-1] * 60
    pred += [int(c) for c in nearest]
    return FeatureDataset(
        dim=DIM,
        num_classes=NUM_CLASSES,
        features=np.vstack(feats),
        true_labels=true,
        predicted_labels=pred,
        manifest=ManifestInfo(source_dataset="synthetic-fixture-eval"),
    )


# 30 handcrafted records: three-way score tie at the golden cutoff 0.25
# (rows 2, 7, 21), a known/unknown tie at 0.7 (rows 14, 29), misclassified
# known rows both above and below the cutoff.
SCORES30 = [
    # (sample_id, true, pred, norm)
    (0, 0, 0, 2.0),
    (1, 0, 0, 1.5),
    (2, 0, 0, 0.25),
    (3, 0, 0, -0.5),
    (4, 0, 1, 0.8),
    (5, 0, 0, 0.3),
    (6, 1, 1, 1.9),
    (7, 1, 1, 0.25),
    (8, 1, 1, 0.26),
    (9, 1, 1, -1.2),
    (10, 1, 2, -0.7),
    (11, 1, 1, 0.9),
    (12, 2, 2, 2.4),
    (13, 2, 2, 1.1),
    (14, 2, 2, 0.7),
    (15, 2, 2, -0.1),
    (16, 2, 2, 0.31),
    (17, 2, 0, 1.4),
    (18, -1, 0, -2.0),
    (19, -1, 0, -1.5),
    (20, -1, 1, -0.9),
    (21, -1, 1, 0.25),
    (22, -1, 2, -0.3),
    (23, -1, 2, -2.5),
    (24, -1, 0, 0.5),
    (25, -1, 1, -1.8),
    (26, -1, 2, -0.6),
    (27, -1, 0, -1.1),
    (28, -1, 1, -2.2),
    (29, -1, 2, 0.7),
]


def make_scores30() -> list[ScoreRecord]:
    records = []
    for sample_id, true, pred, norm in SCORES30:
        records.append(
            ScoreRecord(
                sample_id=sample_id,
                true_label=true,
                predicted_label=pred,
                raw_score=10.0 * pred + norm,  # distinct per-class raw scales
                norm_score=norm,
            )
        )
    return records


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_dataset(make_train(np.random.default_rng(20240611)), FIXTURES / "train.gmf")
    write_dataset(make_eval(np.random.default_rng(20240612)), FIXTURES / "eval.gmf")

    records = make_scores30()
    write_scores_csv(records, FIXTURES / "scores30.csv")

    golden = eval_report_reference(records, tau=GOLDEN_TAU, num_classes=NUM_CLASSES)
    (FIXTURES / "golden_eval30.json").write_text(
        json.dumps(golden, indent=2, sort_keys=True) + "\n"
    )
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
