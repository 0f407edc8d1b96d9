"""Image sources for extraction.

Three kinds of dataset identifier:
    folder:<path>      class subdirectories of PNG/JPEG files
    synthetic-shapes   procedural striped/checkered/blob images, no disk needed
    mnist / cifar10    torchvision datasets, used only if already on disk

Everything returns images in a deterministic order so repeated extractions
are byte-identical.
"""

from __future__ import annotations

import os
import zlib
from pathlib import Path

import numpy as np
from PIL import Image

from gemos_extract.errors import DatasetError

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}

SHAPE_CLASSES = ("horizontal", "vertical", "checker", "disc")
_SHAPE_SPLIT_SIZES = {"train": 512, "test": 128, "ood": 128}


def synthetic_shape_image(split: str, index: int) -> tuple[Image.Image, int]:
    """One deterministic 32x32 RGB image and its label.

    Known splits cycle through four texture classes; the "ood" split draws
    diagonal gradients, a look none of the classes has, labeled -1.
    """
    rng = np.random.default_rng(zlib.crc32(f"{split}:{index}".encode()))
    yy, xx = np.mgrid[0:32, 0:32]
    period = int(rng.integers(3, 7))
    phase = int(rng.integers(0, period))
    if split == "ood":
        label = -1
        canvas = ((xx + yy + phase) % (2 * period) < period).astype(np.float32)
    else:
        label = index % len(SHAPE_CLASSES)
        kind = SHAPE_CLASSES[label]
        if kind == "horizontal":
            canvas = ((yy + phase) % (2 * period) < period).astype(np.float32)
        elif kind == "vertical":
            canvas = ((xx + phase) % (2 * period) < period).astype(np.float32)
        elif kind == "checker":
            canvas = ((((xx + phase) // period) + ((yy + phase) // period)) % 2).astype(
                np.float32
            )
        else:  # disc
            cy, cx = rng.integers(10, 22, size=2)
            r = rng.integers(5, 10)
            canvas = (((xx - cx) ** 2 + (yy - cy) ** 2) <= r * r).astype(np.float32)
    base = rng.uniform(0.1, 0.35)
    tint = rng.uniform(0.6, 0.95, size=3)
    rgb = base + canvas[..., None] * (tint - base)
    noise = rng.normal(0.0, 0.02, size=rgb.shape)
    arr = np.clip((rgb + noise) * 255.0, 0, 255).astype(np.uint8)
    return Image.fromarray(arr, mode="RGB"), label


def _load_synthetic(split: str) -> tuple[list[Image.Image], np.ndarray, list[str] | None]:
    if split not in _SHAPE_SPLIT_SIZES:
        raise DatasetError(
            f"synthetic-shapes has splits {sorted(_SHAPE_SPLIT_SIZES)}, not {split!r}"
        )
    n = _SHAPE_SPLIT_SIZES[split]
    pairs = [synthetic_shape_image(split, i) for i in range(n)]
    labels = np.array([label for _, label in pairs], dtype=np.int64)
    return [img for img, _ in pairs], labels, list(SHAPE_CLASSES)


def _load_folder(root: Path, split: str) -> tuple[list[Image.Image], np.ndarray, list[str]]:
    if (root / split).is_dir():
        root = root / split
    if not root.is_dir():
        raise DatasetError(f"image folder {root} does not exist")
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise DatasetError(f"{root} contains no class subdirectories")
    images: list[Image.Image] = []
    labels: list[int] = []
    for idx, d in enumerate(class_dirs):
        files = sorted(f for f in d.iterdir() if f.suffix.lower() in IMAGE_SUFFIXES)
        for f in files:
            try:
                images.append(Image.open(f).convert("RGB"))
            except OSError as exc:
                raise DatasetError(f"cannot read image {f}: {exc}") from exc
            labels.append(idx)
    if not images:
        raise DatasetError(f"{root} contains no readable images")
    return images, np.array(labels, dtype=np.int64), [d.name for d in class_dirs]


def _load_torchvision(name: str, split: str) -> tuple[list[Image.Image], np.ndarray, list[str]]:
    import torchvision.datasets as tvd

    root = os.environ.get("GEMOS_DATA_ROOT", str(Path.home() / ".cache" / "gemos-data"))
    train = split == "train"
    try:
        if name == "mnist":
            ds = tvd.MNIST(root, train=train, download=False)
        else:
            ds = tvd.CIFAR10(root, train=train, download=False)
    except (RuntimeError, FileNotFoundError) as exc:
        raise DatasetError(
            f"{name} is not available under {root} (set GEMOS_DATA_ROOT); "
            f"this tool never downloads: {exc}"
        ) from exc
    images = [ds[i][0].convert("RGB") for i in range(len(ds))]
    labels = np.array([int(ds[i][1]) for i in range(len(ds))], dtype=np.int64)
    class_names = [str(c) for c in getattr(ds, "classes", range(10))]
    return images, labels, class_names


def load_images(
    dataset: str, split: str
) -> tuple[list[Image.Image], np.ndarray, list[str] | None]:
    """Resolve a dataset identifier to (images, labels, class names)."""
    if dataset.startswith("folder:"):
        return _load_folder(Path(dataset[len("folder:"):]), split)
    if dataset == "synthetic-shapes":
        return _load_synthetic(split)
    if dataset in ("mnist", "cifar10"):
        return _load_torchvision(dataset, split)
    raise DatasetError(
        f"unknown dataset {dataset!r}; use folder:<path>, synthetic-shapes, mnist, or cifar10"
    )


def images_to_array(images: list[Image.Image], input_size: int) -> np.ndarray:
    """Stack PIL images into a float32 NCHW array in [0, 1], resizing as needed."""
    rows = []
    for img in images:
        if img.size != (input_size, input_size):
            img = img.resize((input_size, input_size), Image.BILINEAR)
        rows.append(np.asarray(img, dtype=np.float32) / 255.0)
    batch = np.stack(rows)  # N, H, W, C
    return np.ascontiguousarray(batch.transpose(0, 3, 1, 2))
