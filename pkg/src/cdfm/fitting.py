"""
Per-community fits of disc-restricted normal mixing distributions.

Two estimators: the exact likelihood, whose normalizer ``P(Y in disc)``
comes from the Imhof integral, and noise contrastive estimation, which
replaces ``log P(Y in disc)`` by a free constant ``c`` and learns it by
discriminating the sample from Gaussian noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import optimize

from .errors import NumericalError, ValidationError
from .mixtures import disc_probability, normal_logpdf

__all__ = [
    "FitResult",
    "VARIANCE_FLOOR",
    "mle_objective",
    "fit_mle",
    "nce_objective",
    "nce_terms",
    "fit_nce",
    "fit_communities",
    "fit_errors",
]

VARIANCE_FLOOR = 1e-6
NOISE_RIDGE = 1e-8
NCE_INIT_C = 0.5


@dataclass
class FitResult:
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    c_hat: Optional[float]
    objective_value: float
    converged: bool
    evaluations: int
    clipped: int = 0

    def to_dict(self):
        return {
            "mu_hat": self.mu_hat.tolist(),
            "sigma_diag_hat": np.diag(self.sigma_hat).tolist(),
            "sigma_hat": self.sigma_hat.tolist(),
            "c_hat": self.c_hat,
            "objective": self.objective_value,
            "converged": self.converged,
            "evaluations": self.evaluations,
        }


def _into_disc(samples):
    """Pull points lying outside the unit disc radially onto it."""
    y = np.atleast_2d(np.asarray(samples, dtype=float))
    norms = np.linalg.norm(y, axis=1)
    out = norms > 1.0
    if np.any(out):
        y = y.copy()
        y[out] /= norms[out, None] * (1.0 + 1e-12)
    return y, int(out.sum())


# --- parameter maps ---------------------------------------------------------

def _full_unpack(theta, r):
    mu = theta[:r]
    L = np.zeros((r, r))
    L[np.diag_indices(r)] = np.exp(theta[r:2 * r])
    L[np.tril_indices(r, -1)] = theta[2 * r:]
    return mu, L @ L.T + VARIANCE_FLOOR * np.eye(r)


def _full_pack(mu, sigma):
    r = mu.size
    L = np.linalg.cholesky(sigma - VARIANCE_FLOOR * np.eye(r) + 1e-12 * np.eye(r))
    return np.concatenate([mu, np.log(np.diag(L)), L[np.tril_indices(r, -1)]])


def _diag_unpack(theta, r):
    return theta[:r], np.diag(VARIANCE_FLOOR + np.exp(theta[r:2 * r]))


def _diag_pack(mu, sigma):
    var = np.maximum(np.diag(sigma) - VARIANCE_FLOOR, 1e-12)
    return np.concatenate([mu, np.log(var)])


def _moment_init(y):
    r = y.shape[1]
    mu = y.mean(axis=0)
    cov = np.atleast_2d(np.cov(y, rowvar=False)) if y.shape[0] > 1 else np.zeros((r, r))
    cov = 0.5 * (cov + cov.T) + 2 * VARIANCE_FLOOR * np.eye(r)
    return mu, cov


def _initial_simplex(x0, r, scale):
    steps = np.concatenate([np.full(r, 0.25 * scale), np.full(x0.size - r, 0.5)])
    return np.vstack([x0, x0 + np.diag(steps)])


def _at_floor(sigma):
    return bool(np.any(np.diag(sigma) < 10 * VARIANCE_FLOOR))


def _nelder_mead(fun, x0, r, scale, rng, restarts, maxiter):
    best_x, best_f, evals, ok = x0, fun(x0), 1, False
    start = x0
    for k in range(restarts):
        if k > 0:
            start = best_x + rng.normal(scale=0.1, size=x0.size) * np.concatenate(
                [np.full(r, scale), np.ones(x0.size - r)])
        res = optimize.minimize(
            fun, start, method="Nelder-Mead",
            options={"initial_simplex": _initial_simplex(start, r, scale),
                     "maxiter": maxiter, "maxfev": maxiter * 2,
                     "xatol": 1e-7, "fatol": 1e-10},
        )
        evals += res.nfev
        ok = ok or bool(res.success)
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    return best_x, best_f, evals, ok


# --- maximum likelihood -----------------------------------------------------

def mle_objective(samples, mu, sigma) -> float:
    """``sum_i log f_Y(y_i) - n log P(Y in disc)``."""
    y = np.atleast_2d(samples)
    p = disc_probability(mu, sigma)
    if p <= 0:
        return -np.inf
    return float(np.sum(normal_logpdf(y, mu, sigma)) - y.shape[0] * np.log(p))


def fit_mle(samples, init: Optional[FitResult] = None, rng: Optional[np.random.Generator] = None,
            full_cov: bool = True, restarts: int = 3, maxiter: int = 2000) -> FitResult:
    y, clipped = _into_disc(samples)
    n, r = y.shape
    if n < r + 1:
        raise ValidationError(f"need at least r+1={r + 1} samples, got {n}")
    rng = np.random.default_rng(0) if rng is None else rng
    mu0, cov0 = (init.mu_hat, init.sigma_hat) if init is not None else _moment_init(y)
    pack, unpack = (_full_pack, _full_unpack) if full_cov else (_diag_pack, _diag_unpack)
    if not full_cov:
        cov0 = np.diag(np.diag(cov0))
    scale = float(np.sqrt(max(np.trace(cov0) / r, VARIANCE_FLOOR)))

    def neg(theta):
        mu, sigma = unpack(theta, r)
        try:
            val = mle_objective(y, mu, sigma)
        except (NumericalError, np.linalg.LinAlgError):
            return np.inf
        return -val if np.isfinite(val) else np.inf

    theta, fval, evals, ok = _nelder_mead(neg, pack(mu0, cov0), r, scale, rng, restarts, maxiter)
    mu, sigma = unpack(theta, r)
    return FitResult(mu, sigma, None, float(-fval), ok and not _at_floor(sigma), evals, clipped)


# --- noise contrastive estimation -------------------------------------------

def nce_terms(log_model_y, log_noise_y, log_model_v, log_noise_v) -> float:
    """NCE objective from log-densities of the model and the noise.

    ``(1/2n) sum_i [log h(y_i) + log(1 - h(v_i))]`` with
    ``h = f_model / (f_model + f_noise)``.
    """
    n = np.size(log_model_y)
    a = -np.logaddexp(0.0, np.asarray(log_noise_y) - np.asarray(log_model_y))
    b = -np.logaddexp(0.0, np.asarray(log_model_v) - np.asarray(log_noise_v))
    return float((a.sum() + b.sum()) / (2.0 * n))


def _model_logdensity(pts, inside, mu, sigma, c):
    out = np.full(pts.shape[0], -np.inf)
    out[inside] = normal_logpdf(pts[inside], mu, sigma) - c
    return out


def nce_objective(samples, noise, noise_mean, noise_cov, mu, sigma, c) -> float:
    """NCE objective of the restricted-normal model ``phi_{mu,sigma}(y) e^{-c} 1{|y|<=1}``."""
    y = np.atleast_2d(samples)
    v = np.atleast_2d(noise)
    in_y = np.einsum("ij,ij->i", y, y) <= 1.0
    in_v = np.einsum("ij,ij->i", v, v) <= 1.0
    return nce_terms(
        _model_logdensity(y, in_y, mu, sigma, c), normal_logpdf(y, noise_mean, noise_cov),
        _model_logdensity(v, in_v, mu, sigma, c), normal_logpdf(v, noise_mean, noise_cov),
    )


def fit_nce(samples, rng: np.random.Generator, init: Optional[FitResult] = None,
            restarts: int = 3, maxiter: int = 4000) -> FitResult:
    """Fit mean, diagonal covariance and ``c`` (stand-in for ``log P(Y in disc)``)."""
    y, clipped = _into_disc(samples)
    n, r = y.shape
    if n < r + 1:
        raise ValidationError(f"need at least r+1={r + 1} samples, got {n}")
    noise_mean, noise_cov = y.mean(axis=0), np.atleast_2d(np.cov(y, rowvar=False))
    noise_cov = noise_cov + NOISE_RIDGE * np.eye(r)
    v = rng.multivariate_normal(noise_mean, noise_cov, size=n, method="eigh")
    ly_noise = normal_logpdf(y, noise_mean, noise_cov)
    lv_noise = normal_logpdf(v, noise_mean, noise_cov)
    in_y = np.einsum("ij,ij->i", y, y) <= 1.0
    in_v = np.einsum("ij,ij->i", v, v) <= 1.0

    if init is None:
        mu0, cov0, c0 = noise_mean, np.diag(np.diag(noise_cov)), NCE_INIT_C
    else:
        mu0, cov0, c0 = init.mu_hat, init.sigma_hat, (init.c_hat if init.c_hat is not None else NCE_INIT_C)
    scale = float(np.sqrt(max(np.trace(cov0) / r, VARIANCE_FLOOR)))

    def neg(theta):
        mu, sigma = _diag_unpack(theta[:-1], r)
        c = theta[-1]
        val = nce_terms(_model_logdensity(y, in_y, mu, sigma, c), ly_noise,
                        _model_logdensity(v, in_v, mu, sigma, c), lv_noise)
        return -val if np.isfinite(val) else np.inf

    x0 = np.concatenate([_diag_pack(mu0, cov0), [c0]])
    theta, fval, evals, ok = _nelder_mead(neg, x0, r, scale, rng, restarts, maxiter)
    mu, sigma = _diag_unpack(theta[:-1], r)
    return FitResult(mu, sigma, float(theta[-1]), float(-fval), ok and not _at_floor(sigma), evals, clipped)


# --- communities ------------------------------------------------------------

def fit_communities(loadings_hat, z_hat, method: str = "nce",
                    rng: Optional[np.random.Generator] = None, **kwargs) -> List[FitResult]:
    """Fit each community of estimated loadings independently."""
    lam = np.atleast_2d(np.asarray(loadings_hat, dtype=float))
    z = np.asarray(z_hat, dtype=int)
    rng = np.random.default_rng(0) if rng is None else rng
    method = method.lower()
    if method not in ("mle", "nce"):
        raise ValidationError(f"unknown fitting method {method!r}")
    K = int(z.max()) + 1
    r = lam.shape[1]
    fits = []
    for k in range(K):
        pts = lam[z == k]
        if pts.shape[0] < r + 1:
            raise ValidationError(f"community {k} has {pts.shape[0]} members; need at least {r + 1}")
        if method == "mle":
            fits.append(fit_mle(pts, rng=rng, **kwargs))
        else:
            fits.append(fit_nce(pts, rng, **kwargs))
    return fits


def fit_errors(fits: List[FitResult], true_means, true_variances) -> dict:
    """Per-community mean error ``||mu_hat - mu||`` and variance error
    ``||diag(sigma_hat) - diag(sigma)||`` plus their averages."""
    means = np.atleast_2d(true_means)
    tv = np.asarray(true_variances, dtype=float)
    if tv.ndim == 0:
        tv = np.full(means.shape, float(tv))
    elif tv.ndim == 1 and tv.size == means.shape[0]:
        tv = np.repeat(tv[:, None], means.shape[1], axis=1)
    mean_err = np.array([np.linalg.norm(f.mu_hat - means[k]) for k, f in enumerate(fits)])
    var_err = np.array([np.linalg.norm(np.diag(f.sigma_hat) - tv[k]) for k, f in enumerate(fits)])
    return {
        "mean_errors": mean_err.tolist(),
        "variance_errors": var_err.tolist(),
        "avg_mean_error": float(mean_err.mean()),
        "avg_variance_error": float(var_err.mean()),
    }
