"""Shared fixtures: one trained checkpoint and two image folders per session."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

from gemos_extract.datasets import SHAPE_CLASSES, synthetic_shape_image

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory) -> Path:
    """A real trained small_convnet checkpoint (frozen thereafter)."""
    out = tmp_path_factory.mktemp("weights") / "small_convnet.pt"
    proc = subprocess.run(
        [
            sys.executable,
            str(SCRIPTS / "train_small_backbone.py"),
            "--out",
            str(out),
            "--epochs",
            "2",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "test accuracy" in proc.stdout
    return out


@pytest.fixture(scope="session")
def id_folder(tmp_path_factory) -> Path:
    """100 in-distribution PNGs in four class subdirectories (25 each).

    Directory names carry the training label index as a prefix, so the
    folder loader's alphabetical label assignment matches the checkpoint's
    class order.
    """
    root = tmp_path_factory.mktemp("id_images")
    dirs = [root / f"{i}_{name}" for i, name in enumerate(SHAPE_CLASSES)]
    for d in dirs:
        d.mkdir()
    counts = [0] * len(SHAPE_CLASSES)
    i = 0
    while sum(counts) < 100:
        img, label = synthetic_shape_image("train", i)
        if counts[label] < 25:
            img.save(dirs[label] / f"{counts[label]:03d}.png")
            counts[label] += 1
        i += 1
    return root


@pytest.fixture(scope="session")
def ood_folder(tmp_path_factory) -> Path:
    """100 out-of-distribution PNGs (diagonal gradients the classes lack)."""
    root = tmp_path_factory.mktemp("ood_images")
    (root / "unknown").mkdir()
    for i in range(100):
        img, _ = synthetic_shape_image("ood", i)
        img.save(root / "unknown" / f"{i:03d}.png")
    return root
