"""Train the small four-stage convnet on the procedural texture dataset.

The extractor only ever consumes frozen checkpoints; this script is how
such a checkpoint comes to exist.  Everything is seeded, so the saved
weights are reproducible.

Usage:
    python3 scripts/train_small_backbone.py --out weights.pt [--epochs 8]
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
import torch
from torch import nn

from gemos_extract.backbones import INPUT_SIZES, SmallConvNet
from gemos_extract.datasets import SHAPE_CLASSES, images_to_array, load_images


def _tensors(split: str) -> tuple[torch.Tensor, torch.Tensor]:
    images, labels, _ = load_images("synthetic-shapes", split)
    pixels = images_to_array(images, INPUT_SIZES["small_convnet"])
    return torch.from_numpy(pixels), torch.from_numpy(labels)


def train(out: str | Path, epochs: int = 8, seed: int = 7) -> float:
    """Train, save a checkpoint to ``out``, return test accuracy."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)

    x_train, y_train = _tensors("train")
    x_test, y_test = _tensors("test")

    model = SmallConvNet(num_classes=len(SHAPE_CLASSES))
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()
    batch = 64

    for epoch in range(epochs):
        order = rng.permutation(len(x_train))
        total = 0.0
        for start in range(0, len(order), batch):
            idx = torch.from_numpy(order[start : start + batch])
            optimizer.zero_grad()
            loss = loss_fn(model(x_train[idx]), y_train[idx])
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(idx)
        print(f"epoch {epoch + 1}: mean loss {total / len(order):.4f}")

    model.eval()
    with torch.no_grad():
        accuracy = float((model(x_test).argmax(dim=1) == y_test).float().mean())
    print(f"test accuracy: {accuracy:.4f}")

    torch.save(
        {
            "arch": "small_convnet",
            "num_classes": len(SHAPE_CLASSES),
            "state_dict": model.state_dict(),
        },
        out,
    )
    print(f"saved checkpoint to {out}")
    return accuracy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--epochs", type=int, default=8)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    train(args.out, epochs=args.epochs, seed=args.seed)


if __name__ == "__main__":
    main()
