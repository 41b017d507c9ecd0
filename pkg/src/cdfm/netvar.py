"""
Network VAR(1) driven by a weighted stochastic block model, and its
rewriting as a CDFM with VAR(1) factors once the network is averaged.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._linalg import numerical_rank, spectral_radius
from .errors import IsolatedNodeError, StationarityError, ValidationError
from .model import Membership, VAR_BURN_IN

__all__ = [
    "WsbmVarConfig",
    "SbmVarAveraged",
    "sample_wsbm",
    "transition_matrix",
    "simulate_wsbm_var",
    "empirical_c_values",
    "expected_c_values",
    "cdfm_rewrite",
    "simulate_averaged",
    "weak_factor_table",
]

MAX_ADJACENCY_RESAMPLES = 100


@dataclass
class WsbmVarConfig:
    """Weights are Uniform[weight_low, weight_high] (constant when equal)."""

    membership: Membership
    B: np.ndarray
    phi: float
    weight_low: float = 1.0
    weight_high: float = 1.0

    def __post_init__(self):
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        K = self.membership.K
        if self.B.shape != (K, K):
            raise ValidationError("B must be K x K")
        if not np.allclose(self.B, self.B.T) or np.any(self.B < 0) or np.any(self.B > 1):
            raise ValidationError("B must be symmetric with entries in [0, 1]")
        if self.weight_low > self.weight_high:
            raise ValidationError("weight_low must not exceed weight_high")
        if self.phi < 0:
            raise ValidationError("phi must be nonnegative")

    @property
    def d(self) -> int:
        return self.membership.d

    @property
    def K(self) -> int:
        return self.membership.K

    @property
    def mu_w(self) -> float:
        return 0.5 * (self.weight_low + self.weight_high)


@dataclass
class SbmVarAveraged:
    psi_bar: np.ndarray
    d_bar: np.ndarray
    loadings: np.ndarray
    factor_map: np.ndarray
    phi_mat: np.ndarray
    eta_cov: np.ndarray

    @property
    def gram(self) -> np.ndarray:
        return self.loadings.T @ self.loadings


def sample_wsbm(config: WsbmVarConfig, rng: np.random.Generator,
                max_resamples: int = MAX_ADJACENCY_RESAMPLES):
    """Symmetric weighted adjacency (zero diagonal) and degree vector.

    The graph is redrawn while some node is isolated, at most
    ``max_resamples`` times.
    """
    z = config.membership.z
    d = config.d
    P = config.B[np.ix_(z, z)]
    iu = np.triu_indices(d, 1)
    for _ in range(max_resamples):
        edges = rng.random(iu[0].size) < P[iu]
        w = rng.uniform(config.weight_low, config.weight_high, size=iu[0].size)
        A = np.zeros((d, d))
        A[iu] = np.where(edges, w, 0.0)
        A = A + A.T
        deg = A.sum(axis=1)
        if np.all(deg > 0):
            return A, deg
    raise IsolatedNodeError(f"isolated nodes remain after {max_resamples} adjacency draws")


def transition_matrix(A, degrees, phi: float) -> np.ndarray:
    """``phi D^{-1/2} A D^{-1/2}``."""
    deg = np.asarray(degrees, dtype=float)
    if np.any(deg <= 0):
        raise IsolatedNodeError("degree-normalization needs positive degrees")
    s = 1.0 / np.sqrt(deg)
    return phi * (s[:, None] * np.asarray(A) * s[None, :])


def _simulate_var(psi, T, rng, burn_in):
    if spectral_radius(psi) >= 1.0:
        raise StationarityError("transition matrix has spectral radius >= 1")
    d = psi.shape[0]
    shocks = rng.standard_normal((burn_in + T, d))
    y = np.zeros(d)
    out = np.empty((T, d))
    for t in range(burn_in + T):
        y = psi @ y + shocks[t]
        if t >= burn_in:
            out[t - burn_in] = y
    return out


def simulate_wsbm_var(config: WsbmVarConfig, T: int, rng: np.random.Generator,
                      burn_in: int = VAR_BURN_IN, adjacency=None):
    """Simulate ``Y_t = Psi Y_{t-1} + xi_t`` on a sampled (or given) network.

    Returns ``(series, psi)``.
    """
    A, deg = sample_wsbm(config, rng) if adjacency is None else adjacency
    psi = transition_matrix(A, deg, config.phi)
    return _simulate_var(psi, T, rng, burn_in), psi


def empirical_c_values(degrees, membership: Membership) -> np.ndarray:
    """Mean degree within each community divided by ``d``."""
    deg = np.asarray(degrees, dtype=float)
    return np.array([deg[idx].mean() for idx in membership.communities()]) / membership.d


def expected_c_values(config: WsbmVarConfig) -> np.ndarray:
    """``E[D_ii] / d`` for a node of each community (no self-loops)."""
    n = config.membership.sizes
    return config.mu_w * (config.B @ n - np.diag(config.B)) / config.d


def cdfm_rewrite(config: WsbmVarConfig, c_values, check: bool = True) -> SbmVarAveraged:
    """Averaged transition matrix and the equivalent CDFM pieces.

    With ``G = d^{-1/2} B Z' Dbar^{-1/2}`` the factors are ``f_t = G Ybar_{t-1}``,
    the loadings ``L = (phi mu_W / d^{1/2}) Dbar^{-1/2} Z`` and ``Psi_bar = L G``.
    The factor transition is ``G L = (phi mu_W / d) B Z' Dbar^{-1} Z``.
    """
    c = np.asarray(c_values, dtype=float)
    if c.shape != (config.K,) or np.any(c <= 0):
        raise ValidationError("need K positive C_k values")
    d = config.d
    Z = config.membership.Z
    d_bar = c[config.membership.z]
    s = 1.0 / np.sqrt(d_bar)
    scale = config.phi * config.mu_w
    psi_bar = (scale / d) * (s[:, None] * (Z @ config.B @ Z.T) * s[None, :])
    lam = (scale / np.sqrt(d)) * (s[:, None] * Z)
    G = (config.B @ Z.T) * s[None, :] / np.sqrt(d)
    ZtDZ = Z.T @ (Z / d_bar[:, None])
    phi_mat = (scale / d) * config.B @ ZtDZ
    eta_cov = config.B @ ZtDZ @ config.B / d
    if check:
        err = np.max(np.abs(lam @ G - psi_bar))
        if err > 1e-10 * max(1.0, np.max(np.abs(psi_bar))):
            raise AssertionError(f"Psi_bar != L G (max abs diff {err:.3e})")
    return SbmVarAveraged(psi_bar, d_bar, lam, G, phi_mat, eta_cov)


def simulate_averaged(avg: SbmVarAveraged, T: int, rng: np.random.Generator, burn_in: int = VAR_BURN_IN):
    """Simulate the averaged VAR and its factors.

    Returns ``(Y, F, shocks)`` where ``F[t] = G Y[t-1]`` and ``shocks[t]``
    is the innovation that produced ``Y[t]``; ``F[0]`` uses the last
    burn-in state.
    """
    psi = avg.psi_bar
    if spectral_radius(psi) >= 1.0:
        raise StationarityError("averaged transition has spectral radius >= 1")
    d = psi.shape[0]
    xi = rng.standard_normal((burn_in + T, d))
    y = np.zeros(d)
    Y = np.empty((T, d))
    F = np.empty((T, avg.factor_map.shape[0]))
    for t in range(burn_in + T):
        if t >= burn_in:
            F[t - burn_in] = avg.factor_map @ y
        y = psi @ y + xi[t]
        if t >= burn_in:
            Y[t - burn_in] = y
    return Y, F, xi[burn_in:]


def weak_factor_table(sizes_fraction, B, phi, d_values, weight_low=1.0, weight_high=1.0):
    """``trace(L'L)`` of the rewritten model as ``d`` grows at fixed proportions."""
    frac = np.asarray(sizes_fraction, dtype=float)
    rows = []
    for d in d_values:
        sizes = np.floor(frac * d).astype(int)
        sizes[0] += d - sizes.sum()
        mem = Membership(np.repeat(np.arange(frac.size), sizes), frac.size)
        cfg = WsbmVarConfig(mem, B, phi, weight_low, weight_high)
        avg = cdfm_rewrite(cfg, expected_c_values(cfg))
        rows.append({"d": int(d), "trace": float(np.trace(avg.gram)),
                     "rank_psi_bar": numerical_rank(avg.psi_bar)})
    return rows
