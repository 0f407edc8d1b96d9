"""Wire-format tests: round-trips, validation, and cross-package conformance."""

from __future__ import annotations

import json

import numpy as np
import pytest

from gemos_extract.errors import FormatError
from gemos_extract.gmf_io import (
    HEADER_SIZE,
    UNKNOWN_LABEL,
    manifest_path,
    read_gmf,
    write_gmf,
)


def sample_arrays(n=12, dim=5, num_classes=3, seed=0):
    rng = np.random.default_rng(seed)
    feats = rng.normal(size=(n, dim)).astype(np.float32)
    true = rng.integers(-1, num_classes, size=n)
    pred = rng.integers(0, num_classes, size=n)
    return feats, true, pred


def test_round_trip_exact(tmp_path):
    feats, true, pred = sample_arrays()
    path = tmp_path / "t.gmf"
    write_gmf(path, feats, true, pred, 3, None)
    back = read_gmf(path)
    assert np.array_equal(back.features, feats)
    assert np.array_equal(back.true_labels, true)
    assert np.array_equal(back.predicted_labels, pred)
    assert back.num_classes == 3
    assert back.dim == 5
    assert len(back) == 12
    assert back.manifest is None


def test_file_size_formula(tmp_path):
    feats, true, pred = sample_arrays(n=7, dim=4)
    path = tmp_path / "t.gmf"
    write_gmf(path, feats, true, pred, 3, None)
    assert path.stat().st_size == HEADER_SIZE + 7 * (8 + 4 * 4)


def test_manifest_written_as_sibling(tmp_path):
    feats, true, pred = sample_arrays()
    path = tmp_path / "t.gmf"
    manifest = {
        "backbone_name": "small_convnet",
        "layer_names": ["stage1"],
        "pooling": "global_average",
        "class_names": ["a", "b", "c"],
        "source_dataset": "synthetic-shapes/test",
    }
    write_gmf(path, feats, true, pred, 3, manifest)
    sibling = manifest_path(path)
    assert sibling.name == "t.gmf.manifest.json"
    assert json.loads(sibling.read_text()) == manifest
    assert read_gmf(path).manifest == manifest


def test_primary_package_reads_our_bytes(tmp_path):
    # the sibling scoring package is the authority on this format; it must
    # accept our output without any shared code
    gemos = pytest.importorskip("gemos")
    feats, true, pred = sample_arrays(n=20, dim=6, seed=3)
    path = tmp_path / "t.gmf"
    manifest = {
        "backbone_name": "resnet18",
        "layer_names": ["stage1", "stage2"],
        "pooling": "global_max",
        "class_names": ["x", "y", "z"],
        "source_dataset": "folder:/data/test",
    }
    write_gmf(path, feats, true, pred, 3, manifest)
    ds = gemos.read_dataset(path)
    assert np.array_equal(ds.features, feats)
    assert np.array_equal(ds.true_labels, true)
    assert np.array_equal(ds.predicted_labels, pred)
    assert ds.num_classes == 3
    assert ds.manifest is not None
    assert ds.manifest.backbone_name == "resnet18"
    assert list(ds.manifest.layer_names) == ["stage1", "stage2"]
    assert ds.manifest.pooling == "global_max"
    assert ds.manifest.source_dataset == "folder:/data/test"


def test_we_read_primary_package_bytes(tmp_path):
    gemos = pytest.importorskip("gemos")
    feats, true, pred = sample_arrays(n=9, dim=3, seed=5)
    path = tmp_path / "theirs.gmf"
    ds = gemos.FeatureDataset(
        dim=3, num_classes=3, features=feats, true_labels=true, predicted_labels=pred
    )
    gemos.write_dataset(ds, path)
    back = read_gmf(path)
    assert np.array_equal(back.features, feats)
    assert np.array_equal(back.true_labels, true)
    assert np.array_equal(back.predicted_labels, pred)


def test_write_is_atomic_no_temp_litter(tmp_path):
    feats, true, pred = sample_arrays()
    path = tmp_path / "t.gmf"
    write_gmf(path, feats, true, pred, 3, None)
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"t.gmf"}


def test_rejects_non_finite_features_naming_record(tmp_path):
    feats, true, pred = sample_arrays()
    feats[4, 2] = np.nan
    with pytest.raises(FormatError, match="record 4"):
        write_gmf(tmp_path / "t.gmf", feats, true, pred, 3, None)


def test_rejects_out_of_range_labels(tmp_path):
    feats, true, pred = sample_arrays()
    bad_true = true.copy()
    bad_true[0] = 3
    with pytest.raises(FormatError, match="true"):
        write_gmf(tmp_path / "t.gmf", feats, bad_true, pred, 3, None)
    bad_pred = pred.copy()
    bad_pred[0] = UNKNOWN_LABEL
    with pytest.raises(FormatError, match="predicted"):
        write_gmf(tmp_path / "t.gmf", feats, true, bad_pred, 3, None)


def test_rejects_bad_shapes(tmp_path):
    feats, true, pred = sample_arrays()
    with pytest.raises(FormatError):
        write_gmf(tmp_path / "t.gmf", feats.ravel(), true, pred, 3, None)
    with pytest.raises(FormatError):
        write_gmf(tmp_path / "t.gmf", feats, true[:-1], pred, 3, None)


def test_read_rejects_bad_magic(tmp_path):
    feats, true, pred = sample_arrays()
    path = tmp_path / "t.gmf"
    write_gmf(path, feats, true, pred, 3, None)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="magic"):
        read_gmf(path)


def test_read_rejects_truncated_body(tmp_path):
    feats, true, pred = sample_arrays()
    path = tmp_path / "t.gmf"
    write_gmf(path, feats, true, pred, 3, None)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(FormatError):
        read_gmf(path)


def test_read_rejects_unknown_version(tmp_path):
    feats, true, pred = sample_arrays()
    path = tmp_path / "t.gmf"
    write_gmf(path, feats, true, pred, 3, None)
    raw = bytearray(path.read_bytes())
    raw[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="version"):
        read_gmf(path)
