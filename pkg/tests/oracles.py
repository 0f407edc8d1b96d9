"""Independent reference implementations used to cross-check the library.

Everything here is written the slow, obvious way (pair counting, full
eigendecompositions, explicit loops over candidate cutoffs) and shares
no code with the package.  Tests compare the fast implementations
against these.
"""

from __future__ import annotations

import math

import numpy as np


def auc_pair_count(scores, is_known) -> float:
    """AUC by counting pairs: wins + half-ties over all known/unknown pairs."""
    s = np.asarray(scores, dtype=np.float64)
    known = np.asarray(is_known, dtype=bool)
    ks = s[known]
    us = s[~known]
    wins = float((ks[:, None] > us[None, :]).sum())
    ties = float((ks[:, None] == us[None, :]).sum())
    return (wins + 0.5 * ties) / (ks.size * us.size)


def _distance_matrix(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def lof_reference_fit(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k-distances and local reachability densities, computed naively from
    first definitions with tie-inclusive neighbor sets.  Returns (kdist, lrd)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    dmat = _distance_matrix(X)
    kdist = np.empty(n)
    lrd = np.empty(n)
    neighbor_lists = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        dists = sorted(dmat[i, j] for j in others)
        kdist[i] = dists[k - 1]
        neighbor_lists.append([j for j in others if dmat[i, j] <= kdist[i]])
    for i in range(n):
        reach = [max(kdist[j], dmat[i, j]) for j in neighbor_lists[i]]
        mean_reach = sum(reach) / len(reach)
        lrd[i] = 1.0 / mean_reach if mean_reach > 0 else 1e12
    return kdist, lrd


def lof_reference_query(
    X: np.ndarray, kdist: np.ndarray, lrd: np.ndarray, k: int, x: np.ndarray
) -> float:
    """LOF of a query point against the training set (positive scale)."""
    X = np.asarray(X, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    dists = np.sqrt(((X - x) ** 2).sum(axis=1))
    order = sorted(dists)
    k_dist_x = order[k - 1]
    neighbors = [j for j in range(X.shape[0]) if dists[j] <= k_dist_x]
    reach = [max(kdist[j], dists[j]) for j in neighbors]
    mean_reach = sum(reach) / len(reach)
    lrd_x = 1.0 / mean_reach if mean_reach > 0 else 1e12
    return float(np.mean([lrd[j] for j in neighbors]) / lrd_x)


def f1_reference(predictions, truths, num_classes: int) -> tuple[float, list]:
    """Loop-based macro-F1 over C+1 classes; None marks an undefined class."""
    preds = [int(p) for p in predictions]
    trues = [num_classes if int(t) == -1 else int(t) for t in truths]
    per_class: list[float | None] = []
    for c in range(num_classes + 1):
        tp = sum(1 for p, t in zip(preds, trues) if p == c and t == c)
        fp = sum(1 for p, t in zip(preds, trues) if p == c and t != c)
        fn = sum(1 for p, t in zip(preds, trues) if p != c and t == c)
        if tp + fp + fn == 0:
            per_class.append(None)
        elif tp == 0:
            per_class.append(0.0)
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            per_class.append(2 * precision * recall / (precision + recall))
    defined = [v for v in per_class if v is not None]
    return sum(defined) / len(defined), per_class


def micro_f1_reference(predictions, truths, num_classes: int) -> float:
    preds = [int(p) for p in predictions]
    trues = [num_classes if int(t) == -1 else int(t) for t in truths]
    tp = sum(1 for p, t in zip(preds, trues) if p == t)
    return 2 * tp / (len(preds) + len(trues))


def exhaustive_midpoint_threshold(
    norm_scores, predicted, truths, num_classes: int
) -> tuple[float, float]:
    """Try every midpoint between adjacent distinct scores plus one cutoff
    below the minimum and one above the maximum; ties go to the larger
    cutoff.  Returns (tau, macro_f1)."""
    s = np.asarray(norm_scores, dtype=np.float64)
    preds = np.asarray(predicted, dtype=np.int64)
    distinct = np.unique(s)
    candidates = [float(distinct[0]) - 1.0]
    for a, b in zip(distinct[:-1], distinct[1:]):
        candidates.append(float(a + b) / 2.0)
    candidates.append(float(distinct[-1]) + 1.0)

    best_tau = candidates[0]
    best_f1 = -1.0
    for tau in candidates:
        open_labels = [int(p) if v >= tau else num_classes for v, p in zip(s, preds)]
        macro, _ = f1_reference(open_labels, truths, num_classes)
        if macro >= best_f1:
            best_f1 = macro
            best_tau = tau
    return best_tau, best_f1


def pca_trailing_eigensum(X: np.ndarray, m: int) -> float:
    """Sum of the trailing (discarded) eigenvalues of the sample covariance."""
    X = np.asarray(X, dtype=np.float64)
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / X.shape[0]
    eigvals = np.linalg.eigvalsh(cov)  # ascending
    return float(eigvals[: X.shape[1] - m].sum())


def diag_gaussian_logpdf(x, mean, var) -> float:
    """Log-density of a diagonal Gaussian, term by term in plain Python."""
    total = 0.0
    for xi, mi, vi in zip(x, mean, var):
        total += -0.5 * (math.log(2.0 * math.pi * vi) + (xi - mi) ** 2 / vi)
    return total


def eval_report_reference(records, tau: float, num_classes: int) -> dict:
    """Full evaluation of score records under a global normalized cutoff,
    computed with the oracles above.  Mirrors the EvalReport JSON layout."""
    scores = [r.norm_score for r in records]
    is_known = [r.true_label >= 0 for r in records]
    auc = auc_pair_count(scores, is_known)

    open_labels = [
        r.predicted_label if r.norm_score >= tau else num_classes for r in records
    ]
    truths = [r.true_label for r in records]
    macro, per_class = f1_reference(open_labels, truths, num_classes)
    micro = micro_f1_reference(open_labels, truths, num_classes)

    known_pairs = [
        (o, r.true_label) for o, r in zip(open_labels, records) if r.true_label >= 0
    ]
    kkc_accuracy = sum(1 for o, t in known_pairs if o == t) / len(known_pairs)

    mapped = [num_classes if t == -1 else t for t in truths]
    support = [mapped.count(c) for c in range(num_classes + 1)]
    predicted = [open_labels.count(c) for c in range(num_classes + 1)]
    true_positive = [
        sum(1 for o, t in zip(open_labels, mapped) if o == t == c)
        for c in range(num_classes + 1)
    ]
    return {
        "auc": auc,
        "macro_f1": macro,
        "micro_f1": micro,
        "per_class_f1": per_class,
        "kkc_accuracy": kkc_accuracy,
        "counts": {
            "support": support,
            "predicted": predicted,
            "true_positive": true_positive,
            "total": len(records),
            "known": sum(1 for f in is_known if f),
            "unknown": sum(1 for f in is_known if not f),
        },
        "threshold_used": {"mode": "global_normalized", "tau": tau},
        "num_classes": num_classes,
    }
