"""Scorer sweep through the command-line interface.

The `ablate` subcommand fits every scorer variant on one training file,
evaluates each with its own cross-validated cutoff, and renders a
side-by-side table.  The same interface is available as `gemos ablate`
from a shell; here it is driven in-process.

Run: python3 demos/04_ablation.py
"""

import tempfile
from pathlib import Path

import numpy as np

from gemos import FeatureDataset, write_dataset
from gemos.cli import main

rng = np.random.default_rng(5)
DIM = 10


def cluster(center, n):
    return rng.normal(center, 1.0, size=(n, DIM))


centers = [np.roll(np.array([15.0] + [0.0] * (DIM - 1)), i) for i in range(3)]
uuc = np.full(DIM, -15.0)

train_feats = np.vstack([cluster(c, 80) for c in centers])
train_true = np.repeat(np.arange(3), 80)
eval_feats = np.vstack([cluster(c, 30) for c in centers] + [cluster(uuc, 40)])
eval_true = np.concatenate([np.repeat(np.arange(3), 30), np.full(40, -1)])
stacked = np.vstack(centers)
nearest = np.argmin(((eval_feats[:, None, :] - stacked[None]) ** 2).sum(axis=2), axis=1)

with tempfile.TemporaryDirectory() as tmp:
    train_path = Path(tmp) / "train.gmf"
    eval_path = Path(tmp) / "eval.gmf"
    write_dataset(
        FeatureDataset(dim=DIM, num_classes=3, features=train_feats,
                       true_labels=train_true, predicted_labels=train_true),
        train_path,
    )
    write_dataset(
        FeatureDataset(dim=DIM, num_classes=3, features=eval_feats,
                       true_labels=eval_true, predicted_labels=nearest),
        eval_path,
    )

    prefix = Path(tmp) / "ablation"
    rc = main([
        "ablate",
        "--train", str(train_path),
        "--eval", str(eval_path),
        "--folds", "3",
        "--out-prefix", str(prefix),
    ])
    assert rc == 0

    print()
    print("machine-readable CSV:")
    print(Path(str(prefix) + ".csv").read_text())
