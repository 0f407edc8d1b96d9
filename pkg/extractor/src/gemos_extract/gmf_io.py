"""Minimal GMF v1 codec.

The sibling recognition package defines this wire format; the extractor
deliberately reimplements the few dozen lines rather than importing it, so
the two packages stay coupled through file bytes alone.

Layout, little-endian:
    header (20 bytes): b"GEMF" | u32 version=1 | u32 n | u32 dim | u32 num_classes
    record (8 + 4*dim bytes, n times): i32 true_label | i32 predicted_label | dim*f32

A JSON manifest lives beside the file as ``<name>.manifest.json``.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gemos_extract.errors import FormatError

MAGIC = b"GEMF"
VERSION = 1
HEADER_SIZE = 20
UNKNOWN_LABEL = -1


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("true", "<i4"), ("pred", "<i4"), ("feat", "<f4", (dim,))])


@dataclass
class GmfContent:
    """Decoded file: arrays plus header fields and the manifest dict."""

    features: np.ndarray  # (n, dim) float32
    true_labels: np.ndarray  # (n,) int32, -1 marks unknown-class samples
    predicted_labels: np.ndarray  # (n,) int32
    num_classes: int
    manifest: dict | None

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return int(self.features.shape[0])


def _atomic_write(path: Path, data: bytes) -> None:
    # temp file in the destination directory so os.replace stays atomic
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_gmf(
    path: str | Path,
    features: np.ndarray,
    true_labels: np.ndarray,
    predicted_labels: np.ndarray,
    num_classes: int,
    manifest: dict | None,
) -> None:
    """Validate and write one feature file and its manifest atomically.

    No manifest sibling is written when ``manifest`` is None.

    Raises:
        FormatError: inconsistent shapes, non-finite features, labels out
            of range, or an unrepresentable header field.
    """
    path = Path(path)
    feats = np.ascontiguousarray(features, dtype=np.float32)
    true = np.asarray(true_labels, dtype=np.int32)
    pred = np.asarray(predicted_labels, dtype=np.int32)
    if feats.ndim != 2:
        raise FormatError(f"features must be 2D, got shape {feats.shape}")
    n, dim = feats.shape
    if true.shape != (n,) or pred.shape != (n,):
        raise FormatError(
            f"label arrays must both have shape ({n},), got {true.shape} and {pred.shape}"
        )
    if dim < 1 or num_classes < 1:
        raise FormatError(f"dim={dim} and num_classes={num_classes} must be positive")
    if max(n, dim, num_classes) >= 2**32:
        raise FormatError("header field exceeds the u32 range")
    if not np.all(np.isfinite(feats)):
        bad = int(np.flatnonzero(~np.isfinite(feats).all(axis=1))[0])
        raise FormatError(f"record {bad}: non-finite feature value")
    if true.size and (true.min() < UNKNOWN_LABEL or true.max() >= num_classes):
        raise FormatError(f"true labels must lie in [-1, {num_classes - 1}]")
    if pred.size and (pred.min() < 0 or pred.max() >= num_classes):
        raise FormatError(f"predicted labels must lie in [0, {num_classes - 1}]")

    header = MAGIC + np.array([VERSION, n, dim, num_classes], dtype="<u4").tobytes()
    body = np.empty(n, dtype=_record_dtype(dim))
    body["true"] = true
    body["pred"] = pred
    body["feat"] = feats
    _atomic_write(path, header + body.tobytes())
    if manifest is not None:
        _atomic_write(
            manifest_path(path), (json.dumps(manifest, indent=2) + "\n").encode()
        )


def read_gmf(path: str | Path) -> GmfContent:
    """Decode a feature file, checking structure but not semantics.

    Raises:
        FormatError: wrong magic, wrong version, zero dims, or a byte count
            that disagrees with the header.
        OSError: unreadable file.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_SIZE:
        raise FormatError(f"{path}: too short for a GMF header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}")
    version, n, dim, num_classes = (
        int(v) for v in np.frombuffer(raw, dtype="<u4", count=4, offset=4)
    )
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim == 0 or num_classes == 0:
        raise FormatError(f"{path}: header declares dim={dim}, num_classes={num_classes}")
    expected = HEADER_SIZE + n * (8 + 4 * dim)
    if len(raw) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for {n} records of dim {dim}, got {len(raw)}"
        )
    body = np.frombuffer(raw, dtype=_record_dtype(dim), count=n, offset=HEADER_SIZE)
    mpath = manifest_path(path)
    manifest = json.loads(mpath.read_text()) if mpath.exists() else None
    return GmfContent(
        features=body["feat"].reshape(n, dim).copy(),
        true_labels=body["true"].copy(),
        predicted_labels=body["pred"].copy(),
        num_classes=num_classes,
        manifest=manifest,
    )
