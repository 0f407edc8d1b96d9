"""Feature datasets and the GMF binary file format.

A feature dataset is the hand-off between a backbone's activation extractor
and the scoring core: one row per sample holding the concatenated activation
vector, the ground-truth label (or -1 when unknown), and the backbone's
argmax prediction.

GMF v1 layout, little-endian throughout:

    bytes 0..3    magic b"GEMF"
    bytes 4..7    u32 version (= 1)
    bytes 8..11   u32 n_samples
    bytes 12..15  u32 feature dimension D
    bytes 16..19  u32 known-class count C

followed by n_samples records, each::

    i32 true_label, i32 predicted_label, D x f32 features

sample_id is implicit: a record's 0-based position in the file. A sibling
manifest ``<path>.manifest.json`` carries advisory extraction metadata; the
scoring core never branches on it.

Features are stored as float32 (extraction precision is the bottleneck, not
storage); all downstream arithmetic upcasts to float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gemos.errors import DataFormatError, ValidationError

MAGIC = b"GEMF"
VERSION = 1
HEADER_SIZE = 20

UNKNOWN_LABEL = -1

#: Pooling tags a manifest may carry.
RECOGNIZED_POOLINGS = ("global_average", "global_max")


@dataclass
class ManifestInfo:
    """Advisory metadata describing how a feature file was produced."""

    backbone_name: str = "synthetic"
    layer_names: list[str] = field(default_factory=lambda: ["features"])
    pooling: str = "global_average"
    class_names: list[str] | None = None
    source_dataset: str = "synthetic"

    def to_dict(self) -> dict:
        return {
            "backbone_name": self.backbone_name,
            "layer_names": list(self.layer_names),
            "pooling": self.pooling,
            "class_names": None if self.class_names is None else list(self.class_names),
            "source_dataset": self.source_dataset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ManifestInfo":
        return cls(
            backbone_name=str(d.get("backbone_name", "unknown")),
            layer_names=list(d.get("layer_names", ["features"])),
            pooling=str(d.get("pooling", "global_average")),
            class_names=d.get("class_names"),
            source_dataset=str(d.get("source_dataset", "unknown")),
        )


@dataclass(frozen=True, eq=False)
class SampleRecord:
    """One sample: concatenated activation vector plus labels.

    ``true_label`` is a class index in [0, C) or -1 when ground truth is
    unknown; ``predicted_label`` is the backbone's argmax prediction.
    """

    sample_id: int
    true_label: int
    predicted_label: int
    features: np.ndarray  # (D,) float32

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleRecord):
            return NotImplemented
        return (
            self.sample_id == other.sample_id
            and self.true_label == other.true_label
            and self.predicted_label == other.predicted_label
            and self.features.tobytes() == other.features.tobytes()
        )


class FeatureDataset:
    """Immutable column-oriented collection of samples sharing one dim D.

    Stores features as an (n, D) float32 matrix and labels as int32 vectors.
    Construction copies its inputs; instances are safe to share across
    threads.
    """

    def __init__(
        self,
        dim: int,
        num_classes: int,
        features: np.ndarray,
        true_labels: np.ndarray,
        predicted_labels: np.ndarray,
        sample_ids: np.ndarray | None = None,
        manifest: ManifestInfo | None = None,
    ):
        features = np.asarray(features, dtype=np.float32).reshape(-1, dim).copy()
        n = features.shape[0]
        true_labels = np.asarray(true_labels, dtype=np.int32).reshape(n).copy()
        predicted_labels = np.asarray(predicted_labels, dtype=np.int32).reshape(n).copy()
        if sample_ids is None:
            sample_ids = np.arange(n, dtype=np.int64)
        else:
            sample_ids = np.asarray(sample_ids, dtype=np.int64).reshape(n).copy()
        self.dim = int(dim)
        self.num_classes = int(num_classes)
        self.features = features
        self.true_labels = true_labels
        self.predicted_labels = predicted_labels
        self.sample_ids = sample_ids
        self.manifest = manifest if manifest is not None else ManifestInfo()
        for arr in (self.features, self.true_labels, self.predicted_labels, self.sample_ids):
            arr.setflags(write=False)

    @classmethod
    def from_records(
        cls,
        dim: int,
        num_classes: int,
        records: list[SampleRecord],
        manifest: ManifestInfo | None = None,
    ) -> "FeatureDataset":
        """Build a dataset from individual records.

        Raises:
            ValidationError: if a record's feature vector does not have
                exactly ``dim`` entries.
        """
        feats = np.zeros((len(records), dim), dtype=np.float32)
        for i, rec in enumerate(records):
            vec = np.asarray(rec.features, dtype=np.float32).ravel()
            if vec.shape[0] != dim:
                raise ValidationError(
                    f"record {i} (sample_id={rec.sample_id}): features has "
                    f"{vec.shape[0]} entries, expected {dim}"
                )
            feats[i] = vec
        return cls(
            dim=dim,
            num_classes=num_classes,
            features=feats,
            true_labels=np.array([r.true_label for r in records], dtype=np.int32),
            predicted_labels=np.array([r.predicted_label for r in records], dtype=np.int32),
            sample_ids=np.array([r.sample_id for r in records], dtype=np.int64),
            manifest=manifest,
        )

    def __len__(self) -> int:
        return self.features.shape[0]

    def record(self, i: int) -> SampleRecord:
        return SampleRecord(
            sample_id=int(self.sample_ids[i]),
            true_label=int(self.true_labels[i]),
            predicted_label=int(self.predicted_labels[i]),
            features=self.features[i],
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureDataset):
            return NotImplemented
        # Bitwise feature equality on purpose: round-trips must preserve bits.
        return (
            self.dim == other.dim
            and self.num_classes == other.num_classes
            and self.features.tobytes() == other.features.tobytes()
            and np.array_equal(self.true_labels, other.true_labels)
            and np.array_equal(self.predicted_labels, other.predicted_labels)
            and np.array_equal(self.sample_ids, other.sample_ids)
            and self.manifest == other.manifest
        )

    def __repr__(self) -> str:
        return (
            f"FeatureDataset(n={len(self)}, dim={self.dim}, "
            f"num_classes={self.num_classes})"
        )


def validate(dataset: FeatureDataset) -> list[str]:
    """Check every dataset invariant; return one description per violation.

    An empty list means the dataset is valid. Violations name the offending
    sample_id and field (and the feature index for non-finite entries);
    nothing is raised.
    """
    out: list[str] = []
    if dataset.dim <= 0:
        out.append(f"dim: must be positive, got {dataset.dim}")
    if dataset.num_classes <= 0:
        out.append(f"num_classes: must be positive, got {dataset.num_classes}")
    if len(dataset.manifest.layer_names) == 0:
        out.append("manifest.layer_names: must be non-empty")
    if dataset.manifest.pooling not in RECOGNIZED_POOLINGS:
        out.append(
            f"manifest.pooling: unrecognized tag {dataset.manifest.pooling!r} "
            f"(recognized: {', '.join(RECOGNIZED_POOLINGS)})"
        )
    c = dataset.num_classes
    seen: dict[int, int] = {}
    for i in range(len(dataset)):
        sid = int(dataset.sample_ids[i])
        if sid < 0:
            out.append(f"sample_id={sid}: sample_id must be non-negative")
        if sid in seen:
            out.append(f"sample_id={sid}: duplicate of record {seen[sid]}")
        else:
            seen[sid] = i
        t = int(dataset.true_labels[i])
        if t != UNKNOWN_LABEL and not (0 <= t < c):
            out.append(f"sample_id={sid}: true_label {t} not in {{-1}} u [0, {c})")
        p = int(dataset.predicted_labels[i])
        if not (0 <= p < c):
            out.append(f"sample_id={sid}: predicted_label {p} not in [0, {c})")
        row = dataset.features[i]
        bad = np.flatnonzero(~np.isfinite(row))
        for j in bad:
            out.append(
                f"sample_id={sid}: features[{int(j)}] is non-finite "
                f"({row[int(j)]!r})"
            )
    return out


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def write_dataset(dataset: FeatureDataset, path: str | Path) -> None:
    """Write a dataset as a GMF v1 file plus its sibling JSON manifest.

    Because sample_id is positional in the file, datasets whose sample_ids
    are not exactly 0..n-1 in order cannot round-trip and are rejected.

    Raises:
        ValidationError: if any invariant is violated, or sample_ids are not
            positional.
        OSError: on I/O failure.
    """
    violations = validate(dataset)
    if violations:
        raise ValidationError(
            "dataset violates invariants:\n  " + "\n  ".join(violations)
        )
    n = len(dataset)
    expected_ids = np.arange(n, dtype=np.int64)
    if not np.array_equal(dataset.sample_ids, expected_ids):
        bad = int(np.flatnonzero(dataset.sample_ids != expected_ids)[0])
        raise ValidationError(
            f"record {bad}: sample_id={int(dataset.sample_ids[bad])} but GMF "
            f"stores sample_id positionally; expected {bad}"
        )
    path = Path(path)
    header = MAGIC + np.array(
        [VERSION, n, dataset.dim, dataset.num_classes], dtype="<u4"
    ).tobytes()
    body = np.empty(n, dtype=_record_dtype(dataset.dim))
    body["true"] = dataset.true_labels
    body["pred"] = dataset.predicted_labels
    body["feat"] = dataset.features
    path.write_bytes(header + body.tobytes())
    _manifest_path(path).write_text(
        json.dumps(dataset.manifest.to_dict(), indent=2) + "\n"
    )


def read_dataset(path: str | Path) -> FeatureDataset:
    """Read and validate a GMF v1 file (and its manifest, if present).

    Raises:
        DataFormatError: bad magic, unsupported version, or truncated body
            (the message names the expected and actual byte counts).
        ValidationError: non-finite features or labels out of range.
        OSError: if the file does not exist or cannot be read.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < HEADER_SIZE:
        raise DataFormatError(
            f"{path}: file too short for GMF header "
            f"(expected >= {HEADER_SIZE} bytes, got {len(raw)})"
        )
    if raw[:4] != MAGIC:
        raise DataFormatError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    version, n, dim, num_classes = np.frombuffer(raw, dtype="<u4", count=4, offset=4)
    if version != VERSION:
        raise DataFormatError(
            f"{path}: unsupported GMF version {int(version)}, expected {VERSION}"
        )
    if dim == 0 or num_classes == 0:
        raise DataFormatError(
            f"{path}: header declares dim={int(dim)}, num_classes={int(num_classes)}; "
            "both must be positive"
        )
    expected = HEADER_SIZE + int(n) * (8 + 4 * int(dim))
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: truncated or oversized body; expected {expected} bytes "
            f"total, got {len(raw)}"
        )
    body = np.frombuffer(raw, dtype=_record_dtype(int(dim)), count=int(n), offset=HEADER_SIZE)
    manifest_file = _manifest_path(path)
    manifest = None
    if manifest_file.exists():
        manifest = ManifestInfo.from_dict(json.loads(manifest_file.read_text()))
    dataset = FeatureDataset(
        dim=int(dim),
        num_classes=int(num_classes),
        features=body["feat"].reshape(int(n), int(dim)),
        true_labels=body["true"],
        predicted_labels=body["pred"],
        manifest=manifest,
    )
    violations = validate(dataset)
    if violations:
        raise ValidationError(
            f"{path}: file content violates invariants:\n  " + "\n  ".join(violations)
        )
    return dataset


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("true", "<i4"), ("pred", "<i4"), ("feat", "<f4", (dim,))])
