"""Linear-subspace scorer: negative squared reconstruction error.

A vector close to the span of the training data's top principal
directions reconstructs almost exactly and scores near 0; anything far
off-subspace scores strongly negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gemos.errors import FitError, ValidationError


@dataclass
class PcaModel:
    """Column mean plus the top-m principal directions (rows, orthonormal)."""

    mean: np.ndarray        # (D,)
    components: np.ndarray  # (m, D)
    num_components: int

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # reproducible orientation: each direction's largest-magnitude entry
    # is made positive
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return components


def pca_fit(X: np.ndarray, m: int) -> PcaModel:
    """Fit the top-m principal directions of X.

    Uses an eigendecomposition of the D-by-D covariance when rows
    outnumber dimensions, otherwise an SVD of the centered matrix;
    both yield identical subspaces, the branch just keeps the
    decomposed matrix small.

    Args:
        X: training matrix, shape (n, D), n >= 2.
        m: number of directions to retain, 1 <= m <= min(n, D).

    Raises:
        FitError: fewer than two rows, or m out of range.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise FitError(f"expected a 2-D training matrix, got shape {X.shape}")
    n, dim = X.shape
    if n < 2:
        raise FitError(f"need at least 2 training rows, got {n}")
    if not 1 <= m <= min(n, dim):
        raise FitError(
            f"num_components must be in [1, {min(n, dim)}] for a {n}x{dim} matrix, got {m}"
        )

    mean = X.mean(axis=0)
    centered = X - mean
    if n > dim:
        cov = centered.T @ centered / n
        eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
        order = np.argsort(eigvals)[::-1]
        components = eigvecs[:, order[:m]].T
    else:
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        components = vt[:m].copy()

    return PcaModel(mean=mean, components=_fix_signs(components), num_components=m)


def _check_dim(model: PcaModel, dim: int) -> None:
    if dim != model.dim:
        raise ValidationError(
            f"input has dimension {dim}, model expects {model.dim}"
        )


def pca_score(model: PcaModel, x: np.ndarray) -> float:
    """Negative squared residual after projecting x onto the retained subspace."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    _check_dim(model, x.shape[0])
    centered = x - model.mean
    proj = model.components.T @ (model.components @ centered)
    residual = centered - proj
    return -float(residual @ residual)


def pca_score_many(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Vectorized ``pca_score`` over the rows of X, shape (n,)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
    _check_dim(model, X.shape[1])
    centered = X - model.mean
    coords = centered @ model.components.T
    residual = centered - coords @ model.components
    return -np.sum(residual * residual, axis=1)
