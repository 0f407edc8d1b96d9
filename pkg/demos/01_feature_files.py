"""Feature files from scratch: build a dataset, write it, read it back.

The GMF container stores one float32 feature vector per sample along with
the true label (-1 marks a sample from a class never seen in training) and
the closed-set classifier's predicted label.  A JSON manifest rides along
as a sibling file for provenance.

Run: python3 demos/01_feature_files.py
"""

import tempfile
from pathlib import Path

import numpy as np

from gemos import FeatureDataset, ManifestInfo, read_dataset, write_dataset

rng = np.random.default_rng(7)

# Two known classes in 5 dimensions plus a handful of unknowns.
known_a = rng.normal(0.0, 1.0, size=(20, 5))
known_b = rng.normal(8.0, 1.0, size=(20, 5))
unknown = rng.normal(-8.0, 1.0, size=(5, 5))

features = np.vstack([known_a, known_b, unknown])
true_labels = np.array([0] * 20 + [1] * 20 + [-1] * 5)
# pretend the classifier is right on knowns and routes unknowns to class 1
predicted = np.array([0] * 20 + [1] * 20 + [1] * 5)

data = FeatureDataset(
    dim=5,
    num_classes=2,
    features=features,
    true_labels=true_labels,
    predicted_labels=predicted,
    manifest=ManifestInfo(
        backbone_name="none", source_dataset="demo-01-toy", class_names=["a", "b"]
    ),
)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "toy.gmf"
    write_dataset(data, path)
    size = path.stat().st_size
    print(f"wrote {path.name}: {size} bytes")
    print(f"  header 20 bytes + {len(data)} records x (8 + 4*{data.dim}) bytes")

    back = read_dataset(path)
    print(f"read back: n={len(back)}, dim={back.dim}, classes={back.num_classes}")
    print(
        f"manifest: dataset={back.manifest.source_dataset!r} "
        f"classes={back.manifest.class_names}"
    )

    identical = (
        np.array_equal(back.features, data.features)
        and np.array_equal(back.true_labels, data.true_labels)
        and np.array_equal(back.predicted_labels, data.predicted_labels)
    )
    print(f"round trip exact: {identical}")

    unknown_count = int((back.true_labels == -1).sum())
    print(f"{unknown_count} samples carry the unknown sentinel (-1)")
