"""
PCA estimation of loadings and factors, and comparison with the truth.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import eigh_desc
from .errors import NumericalError, ValidationError

__all__ = [
    "PcaEstimate",
    "AlignedTruth",
    "sample_covariance",
    "sample_correlation",
    "standardize",
    "pca_estimate",
    "pca_from_series",
    "align_truth",
    "align_columns",
    "loading_errors",
    "factor_strength",
]


@dataclass
class PcaEstimate:
    loadings: np.ndarray
    factors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def r(self) -> int:
        return self.eigenvalues.size

    def to_dict(self):
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "loadings": self.loadings.ravel().tolist(),
            "shape": list(self.loadings.shape),
        }


@dataclass
class AlignedTruth:
    lambda0: np.ndarray
    rotation: np.ndarray
    eigenvalues: np.ndarray
    degenerate: bool = False


def sample_covariance(series) -> np.ndarray:
    """``(1/T) sum_t X_t X_t'`` without centering."""
    X = np.atleast_2d(np.asarray(series, dtype=float))
    if X.shape[0] < 1:
        raise ValidationError("need at least one time point")
    S = X.T @ X / X.shape[0]
    return 0.5 * (S + S.T)


def standardize(series) -> np.ndarray:
    """Scale every column to unit sample second moment."""
    X = np.atleast_2d(np.asarray(series, dtype=float))
    scale = np.sqrt(np.mean(X**2, axis=0))
    if np.any(scale == 0):
        bad = np.flatnonzero(scale == 0).tolist()
        raise ValidationError(f"zero-variance columns: {bad}")
    return X / scale


def sample_correlation(series) -> np.ndarray:
    S = sample_covariance(series)
    s = np.sqrt(np.diag(S))
    if np.any(s == 0):
        bad = np.flatnonzero(s == 0).tolist()
        raise ValidationError(f"zero-variance columns: {bad}")
    C = S / np.outer(s, s)
    np.fill_diagonal(C, 1.0)
    return C


def pca_estimate(cov, r: int, series) -> PcaEstimate:
    """PCA loadings ``Q_r D_r^{1/2}`` and factors ``D_r^{-1} L' X_t``.

    ``series`` must be the data ``cov`` was computed from (standardized
    first when ``cov`` is a correlation matrix), otherwise the factors do
    not have identity second moment.
    """
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    if not 1 <= r <= d:
        raise ValidationError(f"need 1 <= r <= d, got r={r}, d={d}")
    try:
        vals, vecs = eigh_desc(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    top = vals[:r]
    if top[-1] <= 0:
        raise NumericalError("top-r eigenvalues must be positive (rank deficient input)")
    lam = vecs[:, :r] * np.sqrt(top)
    X = np.atleast_2d(np.asarray(series, dtype=float))
    factors = X @ lam / top
    return PcaEstimate(lam, factors, top)


def pca_from_series(series, r: int, use_correlation: bool = True) -> PcaEstimate:
    X = standardize(series) if use_correlation else np.asarray(series, dtype=float)
    return pca_estimate(sample_covariance(X), r, X)


def align_truth(loadings) -> AlignedTruth:
    """Rotate true loadings so that ``L0' L0`` is diagonal and descending."""
    lam = np.atleast_2d(np.asarray(loadings, dtype=float))
    vals, Q = eigh_desc(lam.T @ lam)
    lam0 = lam @ Q
    degenerate = bool(np.any(np.abs(np.diff(vals)) <= 1e-10 * max(1.0, abs(vals[0]))))
    if degenerate:
        warnings.warn("loadings Gram matrix has repeated eigenvalues; rotation not identified",
                      RuntimeWarning, stacklevel=2)
    return AlignedTruth(lam0, Q, vals, degenerate)


def align_columns(estimate, target) -> np.ndarray:
    """Per-column sign of ``estimate`` that brings it closest to ``target``."""
    est = np.asarray(estimate, dtype=float)
    tgt = np.asarray(target, dtype=float)
    # ||e - t||^2 < ||e + t||^2  iff  e't > 0
    return np.where(np.sum(est * tgt, axis=0) < 0, -1.0, 1.0)


def loading_errors(est, truth: AlignedTruth) -> dict:
    """``max_i ||l_hat_i - l0_i||_2`` and the max-entry error, sign-resolved per column."""
    lam_hat = est.loadings if isinstance(est, PcaEstimate) else np.asarray(est, dtype=float)
    lam0 = truth.lambda0
    if lam_hat.shape != lam0.shape:
        raise ValidationError("estimate and truth shapes differ")
    diff = lam_hat * align_columns(lam_hat, lam0) - lam0
    return {
        "max_row_l2": float(np.max(np.linalg.norm(diff, axis=1))),
        "max_entry": float(np.max(np.abs(diff))),
    }


def factor_strength(loadings) -> np.ndarray:
    """Eigenvalues of ``L'L / d``; O(1) values indicate strong factors."""
    lam = np.atleast_2d(np.asarray(loadings, dtype=float))
    return np.linalg.eigvalsh(lam.T @ lam)[::-1] / lam.shape[0]
