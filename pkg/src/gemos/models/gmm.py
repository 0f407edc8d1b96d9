"""Diagonal-covariance Gaussian mixture fitting via EM.

The mixture is the default per-class scorer: its log-density under the
fitted mixture is the "more in-distribution = higher" score.  Covariance
is restricted to per-dimension variances with a hard floor, which keeps
the M-step a constrained maximizer and the likelihood trace monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from gemos.errors import FitError, ValidationError
from gemos.models.config import ScorerConfig

# Floors every variance entry, in squared feature units.  Keeps the
# per-component Gaussians bounded on degenerate (duplicate-row) inputs.
VARIANCE_FLOOR = 1e-6

_LOG_2PI = float(np.log(2.0 * np.pi))

# A component whose responsibility mass falls below this is considered
# dead and re-seeded at the worst-explained training point.
_EMPTY_COMPONENT_MASS = 1e-10


@dataclass
class GmmModel:
    """Fitted mixture: ``weights[j]``, ``means[j]``, ``variances[j]`` per component.

    ``loglik_traces`` holds one array of per-iteration mean log-likelihoods
    per restart (diagnostic only, not serialized); ``chosen_restart``
    indexes the restart whose parameters were kept.
    """

    num_components: int
    weights: np.ndarray      # (k,)
    means: np.ndarray        # (k, D)
    variances: np.ndarray    # (k, D), every entry >= VARIANCE_FLOOR
    loglik_traces: list[np.ndarray] = field(default_factory=list, repr=False)
    chosen_restart: int = 0
    final_mean_loglik: float = float("-inf")

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])


def _log_gauss(X: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Per-sample, per-component diagonal-Gaussian log-densities, shape (n, k)."""
    n, _ = X.shape
    k = means.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    log_det = np.sum(np.log(variances), axis=1)  # (k,)
    for j in range(k):
        diff = X - means[j]
        quad = np.sum(diff * diff / variances[j], axis=1)
        out[:, j] = -0.5 * (X.shape[1] * _LOG_2PI + log_det[j] + quad)
    return out


def _e_step(
    X: np.ndarray,
    weights: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Responsibilities, per-sample mixture log-density, and its mean."""
    log_joint = np.log(weights)[None, :] + _log_gauss(X, means, variances)
    log_norm = logsumexp(log_joint, axis=1)
    resp = np.exp(log_joint - log_norm[:, None])
    return resp, log_norm, float(np.mean(log_norm))


def _kmeanspp_init(
    X: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """k-means++ seeding plus one assignment pass.

    Returns initial (weights, means, variances).  Empty or singleton
    clusters fall back to the global per-dimension variance so no
    component starts degenerate.
    """
    n, dim = X.shape
    centers = np.empty((k, dim), dtype=np.float64)
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centers
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))

    # one hard-assignment pass over the seeds
    dists = np.empty((n, k), dtype=np.float64)
    for j in range(k):
        dists[:, j] = np.sum((X - centers[j]) ** 2, axis=1)
    assign = np.argmin(dists, axis=1)

    global_var = np.maximum(np.var(X, axis=0), VARIANCE_FLOOR)
    weights = np.empty(k, dtype=np.float64)
    means = np.empty((k, dim), dtype=np.float64)
    variances = np.empty((k, dim), dtype=np.float64)
    for j in range(k):
        members = X[assign == j]
        if members.shape[0] == 0:
            weights[j] = 1.0
            means[j] = centers[j]
            variances[j] = global_var
        else:
            weights[j] = float(members.shape[0])
            means[j] = members.mean(axis=0)
            if members.shape[0] == 1:
                variances[j] = global_var
            else:
                variances[j] = np.maximum(members.var(axis=0), VARIANCE_FLOOR)
    weights /= weights.sum()
    return weights, means, variances


def _run_em(
    X: np.ndarray, k: int, cfg: ScorerConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One EM run from a fresh seeding; returns (weights, means, variances, trace)."""
    n = X.shape[0]
    weights, means, variances = _kmeanspp_init(X, k, rng)
    trace: list[float] = []

    for _ in range(cfg.em_max_iters):
        resp, log_norm, mean_ll = _e_step(X, weights, means, variances)
        trace.append(mean_ll)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < cfg.em_tolerance:
            break

        mass = resp.sum(axis=0)  # (k,)
        empty = np.flatnonzero(mass < _EMPTY_COMPONENT_MASS)
        if empty.size:
            # hand each dead component its own worst-explained point
            worst = np.argsort(log_norm)
            global_var = np.maximum(np.var(X, axis=0), VARIANCE_FLOOR)
            for rank, j in enumerate(empty):
                means[j] = X[worst[rank % n]]
                variances[j] = global_var
                mass[j] = 1.0
            weights = mass / mass.sum()
            live = np.setdiff1d(np.arange(k), empty)
        else:
            weights = mass / n
            live = np.arange(k)

        for j in live:
            col = resp[:, j]
            means[j] = col @ X / mass[j]
            diff = X - means[j]
            variances[j] = np.maximum(col @ (diff * diff) / mass[j], VARIANCE_FLOOR)
    else:
        # exhausted the budget after an M-step: trace[-1] must describe
        # the parameters actually returned
        _, _, mean_ll = _e_step(X, weights, means, variances)
        trace.append(mean_ll)

    return weights, means, variances, np.asarray(trace, dtype=np.float64)


def gmm_fit(X: np.ndarray, k: int, cfg: ScorerConfig | None = None) -> GmmModel:
    """Fit a k-component diagonal GMM by EM, keeping the best of several restarts.

    Args:
        X: training matrix, shape (n, D).
        k: component count, 1 <= k <= n.
        cfg: EM budget and seed; defaults to ``ScorerConfig(kind="gmm")``.

    Returns:
        The fitted model from the restart with the highest final mean
        log-likelihood (earliest restart wins ties).

    Raises:
        FitError: fewer rows than components, or k < 1.
    """
    cfg = (cfg or ScorerConfig(kind="gmm")).validated()
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise FitError(f"expected a 2-D training matrix, got shape {X.shape}")
    n = X.shape[0]
    if k < 1:
        raise FitError(f"component count must be >= 1, got {k}")
    if n < k:
        raise FitError(f"need at least k={k} training rows, got {n}")

    best: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    best_ll = float("-inf")
    best_restart = 0
    traces: list[np.ndarray] = []
    for restart in range(cfg.em_restarts):
        rng = np.random.default_rng(cfg.rng_seed + restart)
        weights, means, variances, trace = _run_em(X, k, cfg, rng)
        traces.append(trace)
        if trace[-1] > best_ll:
            best = (weights, means, variances)
            best_ll = float(trace[-1])
            best_restart = restart
    assert best is not None
    return GmmModel(
        num_components=k,
        weights=best[0],
        means=best[1],
        variances=best[2],
        loglik_traces=traces,
        chosen_restart=best_restart,
        final_mean_loglik=best_ll,
    )


def _check_dim(model: GmmModel, dim: int) -> None:
    if dim != model.dim:
        raise ValidationError(
            f"input has dimension {dim}, model expects {model.dim}"
        )


def gmm_score(model: GmmModel, x: np.ndarray) -> float:
    """Mixture log-density of a single vector (higher = more in-distribution)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    _check_dim(model, x.shape[0])
    log_joint = np.log(model.weights) + _log_gauss(
        x[None, :], model.means, model.variances
    )[0]
    return float(logsumexp(log_joint))


def gmm_score_many(model: GmmModel, X: np.ndarray) -> np.ndarray:
    """Mixture log-density for every row of X, shape (n,)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
    _check_dim(model, X.shape[1])
    log_joint = np.log(model.weights)[None, :] + _log_gauss(
        X, model.means, model.variances
    )
    return logsumexp(log_joint, axis=1)


def gmm_responsibilities(model: GmmModel, X: np.ndarray) -> np.ndarray:
    """E-step soft assignments, shape (n, k); each row sums to 1."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {X.shape}")
    _check_dim(model, X.shape[1])
    resp, _, _ = _e_step(X, model.weights, model.means, model.variances)
    return resp
