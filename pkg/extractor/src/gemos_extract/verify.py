"""Post-export sanity checks on a GMF file."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gemos_extract.gmf_io import UNKNOWN_LABEL, read_gmf


@dataclass
class VerifyReport:
    """Outcome of one verification pass."""

    path: Path
    ok: bool
    num_samples: int
    dim: int
    num_classes: int
    true_counts: dict[int, int] = field(default_factory=dict)
    pred_counts: dict[int, int] = field(default_factory=dict)
    problems: list[str] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [
            f"file: {self.path}",
            f"samples: {self.num_samples}  dim: {self.dim}  classes: {self.num_classes}",
        ]
        for label in sorted(self.true_counts):
            tag = "unknown" if label == UNKNOWN_LABEL else f"class {label}"
            out.append(f"true {tag}: {self.true_counts[label]}")
        for label in sorted(self.pred_counts):
            out.append(f"pred class {label}: {self.pred_counts[label]}")
        out.extend(f"PROBLEM: {p}" for p in self.problems)
        out.append("OK" if self.ok else "FAILED")
        return out


def verify_export(path: str | Path) -> VerifyReport:
    """Re-read an exported file and check its structural promises.

    Checks: every feature value finite, every true label in
    [-1, num_classes), every predicted label in [0, num_classes).
    The returned report carries per-class counts either way.
    """
    content = read_gmf(path)
    problems: list[str] = []

    bad = ~np.isfinite(content.features)
    if bad.any():
        rows = np.unique(np.nonzero(bad)[0])
        problems.append(
            f"{int(bad.sum())} non-finite feature values "
            f"(first bad record {int(rows[0])})"
        )
    lo, hi = int(content.true_labels.min()), int(content.true_labels.max())
    if lo < UNKNOWN_LABEL or hi >= content.num_classes:
        problems.append(
            f"true labels span [{lo}, {hi}], outside "
            f"[{UNKNOWN_LABEL}, {content.num_classes - 1}]"
        )
    lo, hi = int(content.predicted_labels.min()), int(content.predicted_labels.max())
    if lo < 0 or hi >= content.num_classes:
        problems.append(
            f"predicted labels span [{lo}, {hi}], outside "
            f"[0, {content.num_classes - 1}]"
        )

    true_vals, true_n = np.unique(content.true_labels, return_counts=True)
    pred_vals, pred_n = np.unique(content.predicted_labels, return_counts=True)
    return VerifyReport(
        path=Path(path),
        ok=not problems,
        num_samples=len(content),
        dim=content.dim,
        num_classes=content.num_classes,
        true_counts={int(v): int(c) for v, c in zip(true_vals, true_n)},
        pred_counts={int(v): int(c) for v, c in zip(pred_vals, pred_n)},
        problems=problems,
    )
