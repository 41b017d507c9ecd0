"""
Community dynamic factor model: configuration, simulation and
population-level quantities.

Labels are 0-based throughout (``z[i] in range(K)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import linalg as sla

from ._linalg import is_spd, spectral_radius, sqrtm_psd
from .errors import StationarityError, ValidationError
from .mixtures import MixingKind, MixingSpec, sample_mixing

__all__ = [
    "IidGaussian",
    "Var1",
    "CdfmConfig",
    "Membership",
    "CdfmDraw",
    "draw_membership",
    "draw_loadings",
    "simulate_factors",
    "simulate_series",
    "population_covariance",
    "expected_block_matrix",
    "equidistant_means",
    "random_direction_means",
    "restricted_normal_config",
    "equal_sizes",
    "check_loadings",
    "rotate_correlated_blocks",
    "VAR_BURN_IN",
]

VAR_BURN_IN = 500


@dataclass(frozen=True)
class IidGaussian:
    kind: str = "iid"


@dataclass(frozen=True)
class Var1:
    """Stationary VAR(1) factors ``f_t = A f_{t-1} + u_t``, ``u_t ~ N(0, Q)``."""

    transition: np.ndarray
    innovation_cov: np.ndarray
    kind: str = "var1"

    def __post_init__(self):
        object.__setattr__(self, "transition", np.atleast_2d(np.asarray(self.transition, float)))
        object.__setattr__(self, "innovation_cov", np.atleast_2d(np.asarray(self.innovation_cov, float)))

    def stationary_cov(self):
        """Solves ``S = A S A' + Q``."""
        return sla.solve_discrete_lyapunov(self.transition, self.innovation_cov)


FactorProcess = Union[IidGaussian, Var1]


@dataclass
class CdfmConfig:
    d: int
    T: int
    r: int
    K: int
    weights: np.ndarray
    components: List[MixingSpec]
    factor_process: FactorProcess = field(default_factory=IidGaussian)
    # None means the identity
    error_cov: Optional[np.ndarray] = None
    normalize_errors: bool = False
    fixed_sizes: Optional[Sequence[int]] = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.error_cov is not None:
            self.error_cov = np.asarray(self.error_cov, dtype=float)
        self.validate()

    def validate(self):
        if min(self.d, self.T, self.r, self.K) < 1:
            raise ValidationError("d, T, r and K must be positive")
        w = self.weights
        if w.shape != (self.K,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValidationError("weights must be a probability vector of length K")
        if len(self.components) != self.K:
            raise ValidationError("need exactly K mixing components")
        for c in self.components:
            if c.r != self.r:
                raise ValidationError("component dimension differs from r")
        for k in range(self.K):
            for l in range(k):
                a, b = self.components[k], self.components[l]
                if a.kind == b.kind and np.array_equal(a.mu, b.mu) and _same_shape_params(a, b):
                    raise ValidationError(f"components {l} and {k} coincide")
        fp = self.factor_process
        if isinstance(fp, Var1):
            if fp.transition.shape != (self.r, self.r) or fp.innovation_cov.shape != (self.r, self.r):
                raise ValidationError("VAR(1) matrices must be r x r")
            if spectral_radius(fp.transition) >= 1.0:
                raise StationarityError("VAR(1) transition has spectral radius >= 1")
            if not is_spd(fp.innovation_cov, tol=-1e-12):
                raise ValidationError("innovation covariance must be PSD")
        if self.error_cov is not None and self.error_cov.shape != (self.d, self.d):
            raise ValidationError("error_cov must be d x d")
        if self.error_cov is not None and not np.allclose(self.error_cov, self.error_cov.T):
            raise ValidationError("error_cov must be symmetric")
        if self.fixed_sizes is not None:
            sizes = np.asarray(self.fixed_sizes)
            if sizes.shape != (self.K,) or np.any(sizes < 0) or sizes.sum() != self.d:
                raise ValidationError("fixed_sizes must be K nonnegative counts summing to d")


def _same_shape_params(a: MixingSpec, b: MixingSpec) -> bool:
    if a.kind is MixingKind.RESTRICTED_NORMAL:
        return np.array_equal(a.sigma, b.sigma)
    if a.kind is MixingKind.PND_BETA:
        return (a.beta_a, a.beta_b) == (b.beta_a, b.beta_b)
    return True


@dataclass(frozen=True)
class Membership:
    z: np.ndarray
    K: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=int)
        if z.ndim != 1 or (z.size and (z.min() < 0 or z.max() >= self.K)):
            raise ValidationError("labels must lie in range(K)")
        object.__setattr__(self, "z", z)

    @property
    def d(self) -> int:
        return self.z.size

    @property
    def Z(self) -> np.ndarray:
        out = np.zeros((self.d, self.K))
        out[np.arange(self.d), self.z] = 1.0
        return out

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.K)

    def communities(self):
        return [np.flatnonzero(self.z == k) for k in range(self.K)]


@dataclass
class CdfmDraw:
    config: CdfmConfig
    membership: Membership
    loadings: np.ndarray
    factors: np.ndarray
    errors: np.ndarray
    series: np.ndarray
    error_cov: np.ndarray


def check_loadings(loadings, tol=1e-12):
    lam = np.atleast_2d(np.asarray(loadings, dtype=float))
    if np.any(np.linalg.norm(lam, axis=1) > 1.0 + tol):
        raise ValidationError("every loading row must lie in the unit disc")
    return lam


def equal_sizes(d: int, K: int) -> np.ndarray:
    """Community sizes as equal as possible, remainder to the first ones."""
    base, rem = divmod(d, K)
    return np.array([base + (k < rem) for k in range(K)])


def draw_membership(config: CdfmConfig, rng: np.random.Generator) -> Membership:
    if config.fixed_sizes is not None:
        z = np.repeat(np.arange(config.K), np.asarray(config.fixed_sizes, dtype=int))
    else:
        z = rng.choice(config.K, size=config.d, p=config.weights)
    return Membership(z, config.K)


def draw_loadings(config: CdfmConfig, membership: Membership, rng: np.random.Generator) -> np.ndarray:
    if membership.K != config.K or membership.d != config.d:
        raise ValidationError("membership inconsistent with config")
    lam = np.empty((config.d, config.r))
    for k, idx in enumerate(membership.communities()):
        if idx.size:
            lam[idx] = sample_mixing(config.components[k], idx.size, rng)
    return lam


def simulate_factors(config: CdfmConfig, rng: np.random.Generator, burn_in: int = VAR_BURN_IN) -> np.ndarray:
    T, r = config.T, config.r
    fp = config.factor_process
    if isinstance(fp, IidGaussian):
        return rng.standard_normal((T, r))
    if spectral_radius(fp.transition) >= 1.0:
        raise StationarityError("VAR(1) transition has spectral radius >= 1")
    A = fp.transition
    L = sqrtm_psd(fp.innovation_cov)
    shocks = rng.standard_normal((burn_in + T, r)) @ L.T
    f = np.zeros(r)
    out = np.empty((T, r))
    for t in range(burn_in + T):
        f = A @ f + shocks[t]
        if t >= burn_in:
            out[t - burn_in] = f
    return out


def _error_cov(config: CdfmConfig, loadings: np.ndarray) -> np.ndarray:
    if config.normalize_errors:
        return np.diag(np.clip(1.0 - np.sum(loadings**2, axis=1), 0.0, None))
    if config.error_cov is None:
        return np.eye(config.d)
    return config.error_cov


def _draw_errors(cov: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    d = cov.shape[0]
    noise = rng.standard_normal((T, d))
    if np.count_nonzero(cov - np.diag(np.diag(cov))) == 0:
        return noise * np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return noise @ sqrtm_psd(cov)


def simulate_series(config: CdfmConfig, rng: np.random.Generator) -> CdfmDraw:
    """Draw membership, loadings, factors and errors; ``X = F L' + E``."""
    membership = draw_membership(config, rng)
    lam = draw_loadings(config, membership, rng)
    factors = simulate_factors(config, rng)
    cov = _error_cov(config, lam)
    errors = _draw_errors(cov, config.T, rng)
    series = factors @ lam.T + errors
    return CdfmDraw(config, membership, lam, factors, errors, series, cov)


def population_covariance(loadings, error_cov) -> np.ndarray:
    lam = np.atleast_2d(np.asarray(loadings, dtype=float))
    return lam @ lam.T + np.asarray(error_cov, dtype=float)


def expected_block_matrix(means, sizes) -> np.ndarray:
    """``E[L L' | Z]``: block ``(k, l)`` is ``mu_k' mu_l`` times a matrix of ones."""
    M = np.atleast_2d(np.asarray(means, dtype=float))
    sizes = np.asarray(sizes, dtype=int)
    if M.shape[0] != sizes.size:
        raise ValidationError("need one mean per community size")
    z = np.repeat(np.arange(sizes.size), sizes)
    G = M @ M.T
    return G[np.ix_(z, z)]


def equidistant_means(K: int, m: float) -> np.ndarray:
    """``mu_k = m (cos 2 pi k / K, sin 2 pi k / K)``, k = 1..K."""
    angles = 2.0 * np.pi * np.arange(1, K + 1) / K
    return m * np.column_stack([np.cos(angles), np.sin(angles)])


def random_direction_means(K: int, r: int, m: float, rng: np.random.Generator) -> np.ndarray:
    """``mu_k = m Z_k / ||Z_k||`` with standard normal ``Z_k``."""
    z = rng.standard_normal((K, r))
    return m * z / np.linalg.norm(z, axis=1, keepdims=True)


def restricted_normal_config(d, T, means, sigma, r=None, error_cov=None, normalize_errors=False,
                             fixed_sizes=True, factor_process=None) -> CdfmConfig:
    """Equal-weight mixture of restricted normals ``N(mu_k, sigma^2 I)``.

    ``sigma == 0`` degenerates to point masses at the means.
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    K, r_means = means.shape
    r = r_means if r is None else r
    if sigma > 0:
        comps = [MixingSpec.restricted_normal(mu, sigma**2) for mu in means]
    else:
        comps = [MixingSpec.point_mass(mu) for mu in means]
    sizes = equal_sizes(d, K) if fixed_sizes is True else fixed_sizes
    return CdfmConfig(
        d=d, T=T, r=r, K=K, weights=np.full(K, 1.0 / K), components=comps,
        factor_process=factor_process or IidGaussian(), error_cov=error_cov,
        normalize_errors=normalize_errors,
        fixed_sizes=None if sizes is False else sizes,
    )


def rotate_correlated_blocks(lam1, lam2, rho):
    """Move factor correlation ``rho`` into two-block loadings.

    ``lam1`` and ``lam2`` are the nonzero loadings of the two communities
    under factors with correlation ``rho``; the result has the same
    distribution of ``X`` with uncorrelated unit-variance factors.
    """
    if not abs(rho) < 1:
        raise ValidationError("|rho| must be < 1")
    p, q = np.sqrt(1 + rho), np.sqrt(1 - rho)
    lam1 = np.asarray(lam1, dtype=float).ravel()
    lam2 = np.asarray(lam2, dtype=float).ravel()
    top = np.column_stack([lam1 * (p + q), lam1 * (p - q)])
    bottom = np.column_stack([lam2 * (p - q), lam2 * (p + q)])
    return 0.5 * np.vstack([top, bottom])
