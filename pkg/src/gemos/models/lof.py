"""Local outlier factor scorer.

Density-ratio scoring: a query whose local reachability density matches
its neighbors' densities gets LOF close to 1 (score close to -1), while
a query in a sparser region than its neighbors gets LOF >> 1.  All
pairwise distances are exact; training sets are assumed small enough
for the O(n^2) precompute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from gemos.errors import FitError, ValidationError

# Replaces a zero mean reachability distance (a point surrounded only by
# duplicates of itself) so densities stay finite.
_ZERO_REACH_EPS = 1e-12


@dataclass
class LofModel:
    """Stored training points with their precomputed neighborhood statistics.

    ``neighbor_sets`` is a fit-time diagnostic (index arrays, tie
    inclusive); it is not serialized and is None on a loaded model.
    """

    points: np.ndarray       # (n, D)
    k_neighbors: int
    k_distances: np.ndarray  # (n,)
    lrd: np.ndarray          # (n,) local reachability densities
    neighbor_sets: list[np.ndarray] | None = None

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


def lof_fit(X: np.ndarray, k: int) -> LofModel:
    """Precompute k-distances, neighbor sets, and reachability densities.

    Neighbor sets are tie inclusive: every other point at distance
    <= the k-distance belongs to the set, so it can hold more than k
    members.  A point's own row is excluded by index, but duplicate
    rows are legitimate neighbors at distance 0.

    Args:
        X: training matrix, shape (n, D).
        k: neighbor count, 1 <= k < n.

    Raises:
        FitError: n <= k or k < 1.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise FitError(f"expected a 2-D training matrix, got shape {X.shape}")
    n = X.shape[0]
    if k < 1:
        raise FitError(f"k_neighbors must be >= 1, got {k}")
    if n <= k:
        raise FitError(f"need more than k={k} training rows, got {n}")

    dists = cdist(X, X)
    np.fill_diagonal(dists, np.inf)
    k_distances = np.partition(dists, k - 1, axis=1)[:, k - 1]

    neighbor_sets: list[np.ndarray] = []
    for i in range(n):
        neighbor_sets.append(np.flatnonzero(dists[i] <= k_distances[i]))

    lrd = np.empty(n, dtype=np.float64)
    for i, neighbors in enumerate(neighbor_sets):
        reach = np.maximum(k_distances[neighbors], dists[i, neighbors])
        mean_reach = float(reach.mean())
        lrd[i] = 1.0 / (mean_reach if mean_reach > 0.0 else _ZERO_REACH_EPS)

    return LofModel(
        points=X,
        k_neighbors=k,
        k_distances=k_distances,
        lrd=lrd,
        neighbor_sets=neighbor_sets,
    )


def _score_against_bank(model: LofModel, dist_row: np.ndarray) -> float:
    k = model.k_neighbors
    k_dist = np.partition(dist_row, k - 1)[k - 1]
    neighbors = np.flatnonzero(dist_row <= k_dist)
    reach = np.maximum(model.k_distances[neighbors], dist_row[neighbors])
    mean_reach = float(reach.mean())
    lrd_query = 1.0 / (mean_reach if mean_reach > 0.0 else _ZERO_REACH_EPS)
    return -float(model.lrd[neighbors].mean() / lrd_query)


def lof_score(model: LofModel, x: np.ndarray) -> float:
    """Negated LOF of x as a query against the stored points (never itself)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != model.dim:
        raise ValidationError(
            f"input has dimension {x.shape[0]}, model expects {model.dim}"
        )
    dist_row = cdist(x[None, :], model.points)[0]
    return _score_against_bank(model, dist_row)


def lof_score_many(model: LofModel, X: np.ndarray) -> np.ndarray:
    """``lof_score`` for every row of X, shape (n,)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
    if X.shape[1] != model.dim:
        raise ValidationError(
            f"input has dimension {X.shape[1]}, model expects {model.dim}"
        )
    dist_rows = cdist(X, model.points)
    return np.array(
        [_score_against_bank(model, row) for row in dist_rows], dtype=np.float64
    )
