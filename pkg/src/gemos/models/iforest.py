"""Isolation forest scorer.

Each tree recursively partitions a random subsample with axis-aligned
random splits; points that separate from the bulk in few splits are
anomalous.  The returned score is the negated anomaly score
-2^(-E[h(x)] / c(psi)), so in-distribution points sit near 0 and
isolated ones near -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from gemos.errors import FitError, ValidationError
from gemos.models.config import ScorerConfig


@dataclass
class IsoLeaf:
    """Terminal node holding ``count`` subsample rows."""

    count: int


@dataclass
class IsoSplit:
    """Internal node: rows with ``x[dim] < value`` go left, the rest right."""

    dim: int
    value: float
    left: "IsoSplit | IsoLeaf"
    right: "IsoSplit | IsoLeaf"


IsoNode = IsoSplit | IsoLeaf


@dataclass
class IsolationForestModel:
    trees: list[IsoNode]
    num_trees: int
    effective_subsample: int  # min(configured subsample size, n); normalizes paths
    dim: int


@lru_cache(maxsize=None)
def average_path_length(n: int) -> float:
    """Expected unsuccessful-search path length c(n) of a binary search tree.

    Computed with the exact harmonic number, not the asymptotic
    approximation: c(n) = 2 H(n-1) - 2 (n-1)/n, with c(0) = c(1) = 0.
    """
    if n <= 1:
        return 0.0
    harmonic = float(np.sum(1.0 / np.arange(1, n)))
    return 2.0 * harmonic - 2.0 * (n - 1) / n


def _build(data: np.ndarray, depth: int, limit: int, rng: np.random.Generator) -> IsoNode:
    n = data.shape[0]
    if depth >= limit or n <= 1:
        return IsoLeaf(count=n)
    lows = data.min(axis=0)
    highs = data.max(axis=0)
    spread_dims = np.flatnonzero(highs > lows)
    if spread_dims.size == 0:  # all remaining rows identical
        return IsoLeaf(count=n)
    dim = int(spread_dims[rng.integers(spread_dims.size)])
    value = float(rng.uniform(lows[dim], highs[dim]))
    mask = data[:, dim] < value
    n_left = int(mask.sum())
    if n_left == 0 or n_left == n:  # split landed on the boundary
        return IsoLeaf(count=n)
    return IsoSplit(
        dim=dim,
        value=value,
        left=_build(data[mask], depth + 1, limit, rng),
        right=_build(data[~mask], depth + 1, limit, rng),
    )


def iforest_fit(X: np.ndarray, cfg: ScorerConfig | None = None) -> IsolationForestModel:
    """Build ``cfg.num_trees`` isolation trees on independent subsamples.

    Tree t draws its subsample and splits from ``default_rng(rng_seed + t)``,
    and subsample indices are sorted before building, so a fit is fully
    reproducible from the seed.

    Args:
        X: training matrix, shape (n, D), n >= 2.
        cfg: tree count, subsample size, and seed.

    Raises:
        FitError: fewer than 2 rows, or an effective subsample below 2.
    """
    cfg = (cfg or ScorerConfig(kind="iforest")).validated()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise FitError(f"expected a 2-D training matrix, got shape {X.shape}")
    n, dim = X.shape
    if n < 2:
        raise FitError(f"need at least 2 training rows, got {n}")
    psi = min(cfg.subsample_size, n)
    if psi < 2:
        raise FitError(f"effective subsample must be >= 2, got {psi}")
    limit = math.ceil(math.log2(psi))

    trees: list[IsoNode] = []
    for t in range(cfg.num_trees):
        rng = np.random.default_rng(cfg.rng_seed + t)
        indices = np.sort(rng.choice(n, size=psi, replace=False))
        trees.append(_build(X[indices], 0, limit, rng))
    return IsolationForestModel(
        trees=trees, num_trees=cfg.num_trees, effective_subsample=psi, dim=dim
    )


def _path_length(node: IsoNode, x: np.ndarray) -> float:
    depth = 0
    while isinstance(node, IsoSplit):
        node = node.left if x[node.dim] < node.value else node.right
        depth += 1
    return depth + average_path_length(node.count)


def iforest_score(model: IsolationForestModel, x: np.ndarray) -> float:
    """Negated anomaly score in [-1, 0); higher = more in-distribution."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dim:
        raise ValidationError(
            f"input has dimension {x.shape[0]}, model expects {model.dim}"
        )
    mean_path = sum(_path_length(tree, x) for tree in model.trees) / len(model.trees)
    return -float(2.0 ** (-mean_path / average_path_length(model.effective_subsample)))


def iforest_score_many(model: IsolationForestModel, X: np.ndarray) -> np.ndarray:
    """``iforest_score`` for every row of X, shape (n,)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
    if X.shape[1] != model.dim:
        raise ValidationError(
            f"input has dimension {X.shape[1]}, model expects {model.dim}"
        )
    norm = average_path_length(model.effective_subsample)
    out = np.empty(X.shape[0], dtype=np.float64)
    for i, row in enumerate(X):
        mean_path = sum(_path_length(tree, row) for tree in model.trees) / len(model.trees)
        out[i] = -(2.0 ** (-mean_path / norm))
    return out
