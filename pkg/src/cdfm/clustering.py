"""
k-means community detection on estimated loadings and the diagnostics
that govern Lloyd's algorithm on sub-Gaussian mixtures: separation,
signal-to-noise ratios, initialization quality and the misclustering bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError

__all__ = [
    "ClusteringResult",
    "SeparationStats",
    "InitQualityReport",
    "kmeans_pp_init",
    "lloyd",
    "kmeans",
    "kmeans_objective",
    "misclustering_rate",
    "match_labels",
    "separation_stats",
    "init_quality",
    "theorem_bound",
    "default_max_iter",
]

EXHAUSTIVE_MAX_K = 8


@dataclass
class ClusteringResult:
    labels: np.ndarray
    means: np.ndarray
    iterations: int
    objective: float
    converged: bool
    objective_history: List[float] = field(default_factory=list)
    misclustering_history: List[float] = field(default_factory=list)
    reseeded: int = 0

    def to_dict(self):
        return {
            "labels": self.labels.tolist(),
            "means": self.means.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "reseeded_empty_clusters": self.reseeded,
        }


def default_max_iter(d: int) -> int:
    return max(100, math.ceil(4 * math.log(max(d, 2))))


def kmeans_objective(points, labels, means) -> float:
    """``(1/d) sum_i ||x_i - m_{z(i)}||^2``."""
    x = np.atleast_2d(points)
    return float(np.mean(np.sum((x - np.asarray(means)[labels]) ** 2, axis=1)))


def _sq_dists(x, means):
    return np.sum((x[:, None, :] - means[None, :, :]) ** 2, axis=2)


def kmeans_pp_init(points, K: int, rng: np.random.Generator):
    """k-means++ seeding: first mean uniform, later ones with D^2 weights.

    Returns ``(means, indices)``.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n = x.shape[0]
    if K < 1:
        raise ValidationError("K must be positive")
    if np.unique(x, axis=0).shape[0] < K:
        raise ValidationError("fewer than K distinct points")
    idx = [int(rng.integers(n))]
    d2 = np.sum((x - x[idx[0]]) ** 2, axis=1)
    for _ in range(1, K):
        # duplicates of chosen means have zero weight, so means stay distinct
        j = int(rng.choice(n, p=d2 / d2.sum()))
        idx.append(j)
        d2 = np.minimum(d2, np.sum((x - x[j]) ** 2, axis=1))
    return x[idx].copy(), np.array(idx)


def lloyd(points, K: int, init_means, max_iter: Optional[int] = None,
          z_true=None) -> ClusteringResult:
    """Lloyd iterations from ``init_means`` until the assignment is stable.

    Ties go to the lowest cluster index. An empty cluster is re-seeded at
    the point farthest from its current center.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    means = np.array(init_means, dtype=float, copy=True).reshape(K, x.shape[1])
    n = x.shape[0]
    max_iter = default_max_iter(n) if max_iter is None else max_iter
    labels = None
    obj_hist, mis_hist = [], []
    reseeded = 0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, means)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=K)
        while np.any(counts == 0):
            k = int(np.flatnonzero(counts == 0)[0])
            own = d2[np.arange(n), new]
            own[counts[new] <= 1] = -1.0  # never empty another cluster
            far = int(np.argmax(own))
            new[far] = k
            means[k] = x[far]
            d2[:, k] = np.sum((x - x[far]) ** 2, axis=1)
            counts = np.bincount(new, minlength=K)
            reseeded += 1
        if labels is not None and np.array_equal(new, labels):
            converged = True
            it -= 1
            break
        labels = new
        means = np.array([x[labels == k].mean(axis=0) for k in range(K)])
        obj_hist.append(kmeans_objective(x, labels, means))
        if z_true is not None:
            mis_hist.append(misclustering_rate(labels, z_true, K))
    else:
        converged = False
    return ClusteringResult(
        labels=labels, means=means, iterations=max(it, 1), objective=obj_hist[-1],
        converged=converged, objective_history=obj_hist,
        misclustering_history=mis_hist, reseeded=reseeded,
    )


def kmeans(points, K: int, rng: np.random.Generator, n_init: int = 1,
           max_iter: Optional[int] = None, z_true=None) -> ClusteringResult:
    """k-means++ followed by Lloyd; best objective over ``n_init`` seedings."""
    best = None
    for _ in range(n_init):
        init, _ = kmeans_pp_init(points, K, rng)
        res = lloyd(points, K, init, max_iter=max_iter, z_true=z_true)
        if best is None or res.objective < best.objective - 1e-15:
            best = res
    return best


def _confusion(z_hat, z_true, K):
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (z_hat, z_true), 1)
    return C


def match_labels(z_hat, z_true, K: Optional[int] = None) -> np.ndarray:
    """Permutation ``perm`` maximizing agreement of ``perm[z_hat]`` with ``z_true``."""
    z_hat = np.asarray(z_hat, dtype=int)
    z_true = np.asarray(z_true, dtype=int)
    K = max(int(z_hat.max()) + 1, int(z_true.max()) + 1, K or 0)
    C = _confusion(z_hat, z_true, K)
    if K <= EXHAUSTIVE_MAX_K:
        best, best_perm = -1, None
        rows = np.arange(K)
        for perm in itertools.permutations(range(K)):
            hits = C[rows, perm].sum()
            if hits > best:
                best, best_perm = hits, perm
        return np.array(best_perm)
    rows, cols = linear_sum_assignment(-C)
    perm = np.empty(K, dtype=int)
    perm[rows] = cols
    return perm


def misclustering_rate(z_hat, z_true, K: Optional[int] = None) -> float:
    """Fraction of disagreeing labels, minimized over relabelings of ``z_hat``."""
    z_hat = np.asarray(z_hat, dtype=int)
    z_true = np.asarray(z_true, dtype=int)
    if z_hat.shape != z_true.shape:
        raise ValidationError("label vectors differ in length")
    if z_hat.size == 0:
        return 0.0
    perm = match_labels(z_hat, z_true, K)
    return float(np.mean(perm[z_hat] != z_true))


@dataclass
class SeparationStats:
    delta: float
    m_max: float
    alpha: float
    rho_sigma: float
    rho_eps: float
    delta_bound: float
    sigma: float
    eps: float
    d: int
    K: int
    r: int

    def to_dict(self):
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                for k, v in asdict(self).items()}


def separation_stats(true_means, sizes, sigma: float, eps: float, r: Optional[int] = None) -> SeparationStats:
    """Separation of the mixture means and the two signal-to-noise ratios.

    ``rho_sigma = (Delta / sigma) sqrt(alpha / (1 + K r / d))`` and
    ``rho_eps = sqrt(alpha) Delta / eps``; ``sigma`` is the sub-Gaussian
    parameter of the mixing distributions and ``eps`` the maximal row error
    of the estimated loadings.
    """
    mu = np.atleast_2d(np.asarray(true_means, dtype=float))
    sizes = np.asarray(sizes, dtype=float)
    K = mu.shape[0]
    r = mu.shape[1] if r is None else r
    if sizes.size != K:
        raise ValidationError("need one size per mean")
    if sigma < 0 or eps < 0:
        raise ValidationError("sigma and eps must be nonnegative")
    d = int(sizes.sum())
    if K > 1:
        dist = [np.linalg.norm(mu[k] - mu[l]) for k in range(K) for l in range(k)]
        delta, m_max = float(min(dist)), float(max(dist))
    else:
        delta = m_max = 0.0
    alpha = float(sizes.min() / d)
    rho_sigma = _ratio(delta, sigma) * math.sqrt(alpha / (1.0 + K * r / d))
    rho_eps = math.sqrt(alpha) * _ratio(delta, eps)
    dbound = 1.0 / d + 2.0 * _exp_neg(_ratio(delta, sigma)) + 2.0 * _exp_neg(_ratio(delta**2, 8.0 * eps * sigma))
    return SeparationStats(delta, m_max, alpha, rho_sigma, rho_eps, dbound,
                           float(sigma), float(eps), d, K, int(r))


def _ratio(num, den):
    if den == 0:
        return math.inf if num > 0 else 0.0
    return num / den


def _exp_neg(x):
    return 0.0 if x == math.inf else math.exp(-x)


def _inv(x):
    return 0.0 if x == math.inf else (math.inf if x == 0 else 1.0 / x)


@dataclass
class InitQualityReport:
    g0: float
    mean_dev: float
    g0_threshold: float
    mean_threshold: float
    good: bool

    def to_dict(self):
        return asdict(self)


def cluster_misclustering(z0, z_true, K: int) -> float:
    """``G0``: the worst cluster-wise misclustering of an initial labeling."""
    n = _confusion(np.asarray(z0, int), np.asarray(z_true, int), K).T  # n[l, k] = |U_lk|
    off = n - np.diag(np.diag(n))
    est_sizes = n.sum(axis=0)
    true_sizes = n.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        into = np.where(est_sizes > 0, off.sum(axis=0) / est_sizes, 0.0)
        out_of = np.where(true_sizes > 0, off.sum(axis=1) / true_sizes, 0.0)
    return float(max(into.max(), out_of.max()))


def init_quality(z0, means0, z_true, true_means, stats: SeparationStats) -> InitQualityReport:
    """Check the two "good enough initialization" conditions.

    Labels of ``z0`` and rows of ``means0`` are taken as already matched to
    the true communities (see :func:`match_labels`).
    """
    K = stats.K
    g0 = cluster_misclustering(z0, z_true, K)
    dev = np.linalg.norm(np.atleast_2d(means0) - np.atleast_2d(true_means), axis=1).max()
    mean_dev = _ratio(float(dev), stats.delta)
    sqrt_a = math.sqrt(stats.alpha)
    shape_term = stats.alpha ** -0.25 * math.sqrt(_ratio(stats.sigma, stats.delta))
    g_thr = (0.5 - (math.sqrt(6) + 1) * _inv(stats.rho_sigma)
             - (2.1 * sqrt_a + 1) * _inv(stats.rho_eps) - shape_term) * _ratio(stats.delta, stats.m_max)
    m_thr = 0.5 - _inv(stats.rho_sigma) - (1.1 * sqrt_a + 1) * _inv(stats.rho_eps) - shape_term
    g_thr, m_thr = max(0.0, g_thr), max(0.0, m_thr)
    good = bool(g0 <= g_thr or mean_dev <= m_thr)
    return InitQualityReport(g0, float(mean_dev), g_thr, m_thr, good)


def theorem_bound(stats: SeparationStats) -> dict:
    """Misclustering bound ``max{exp(-D^2/(16 s^2)), exp(-D^2/(8 eps s))}``.

    The bound holds after ``4 log d`` Lloyd steps under the hypotheses
    reported alongside it; the ones involving unspecified constants are
    given as raw ratios.
    """
    D, s, e = stats.delta, stats.sigma, stats.eps
    first = _exp_neg(_ratio(D**2, 16.0 * s**2))
    second = _exp_neg(_ratio(D**2, 8.0 * e * s))
    snr = _ratio(D**2, e * s)
    r_log3 = stats.r * math.log(3.0)
    log_d = math.log(stats.d) if stats.d > 1 else 0.0
    sqrt_k = math.sqrt(stats.K)
    conditions = {
        "delta2_over_eps_sigma": snr,
        "r_log3": r_log3,
        "delta2_over_eps_sigma_ok": bool(snr >= r_log3),
        "d_alpha_over_K_log_d": _ratio(stats.d * stats.alpha, stats.K * log_d),
        "rho_sigma_over_sqrt_K": stats.rho_sigma / sqrt_k,
        "rho_eps_over_sqrt_K": stats.rho_eps / sqrt_k,
        "min_iterations": 4.0 * log_d,
        "probability_at_least": max(0.0, 1.0 - stats.delta_bound),
    }
    return {"bound": max(first, second), "subgaussian_term": first,
            "estimation_term": second, "conditions": conditions}
