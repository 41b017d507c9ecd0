"""
Mixing distributions on the unit disc.

Three families are supported: point masses, projected-normal directions
scaled by a Beta radius, and multivariate normals restricted to the disc.
The normalizer of the restricted normal, ``P(Y in disc)``, is the CDF at 1
of the quadratic form ``Y'Y``, a weighted sum of noncentral chi-squared
variables, which is evaluated with Imhof's inversion integral.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from ._linalg import eigh_desc, is_spd
from .errors import QuadratureError, SamplerError, ValidationError

__all__ = [
    "MixingKind",
    "MixingSpec",
    "GeneralizedChiSq",
    "sample_mixing",
    "gchisq_cdf",
    "disc_probability",
    "restricted_normal_logpdf",
    "normal_logpdf",
    "MAX_REJECTION_ATTEMPTS",
]

MAX_REJECTION_ATTEMPTS = 10**7


class MixingKind(str, enum.Enum):
    POINT_MASS = "point_mass"
    PND_BETA = "pnd_beta"
    RESTRICTED_NORMAL = "restricted_normal"


@dataclass(frozen=True)
class MixingSpec:
    """One mixture component on the unit disc.

    ``mu`` is the atom for a point mass, the mean of the normal vector
    whose direction is kept for PND x Beta, and the (unrestricted) mean
    for the restricted normal.
    """

    kind: MixingKind
    mu: np.ndarray
    sigma: Optional[np.ndarray] = None
    beta_a: Optional[float] = None
    beta_b: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MixingKind(self.kind))
        object.__setattr__(self, "mu", np.atleast_1d(np.asarray(self.mu, dtype=float)))
        if self.sigma is not None:
            sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
            object.__setattr__(self, "sigma", sigma)
        self.validate()

    @classmethod
    def point_mass(cls, mu):
        return cls(MixingKind.POINT_MASS, mu)

    @classmethod
    def pnd_beta(cls, mu, a, b):
        return cls(MixingKind.PND_BETA, mu, beta_a=float(a), beta_b=float(b))

    @classmethod
    def restricted_normal(cls, mu, sigma):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = float(sigma) * np.eye(mu.size)
        return cls(MixingKind.RESTRICTED_NORMAL, mu, sigma=sigma)

    @property
    def r(self) -> int:
        return int(self.mu.size)

    def validate(self):
        if self.mu.ndim != 1 or self.mu.size == 0 or not np.all(np.isfinite(self.mu)):
            raise ValidationError("mu must be a finite nonempty vector")
        if self.kind is MixingKind.POINT_MASS:
            if np.linalg.norm(self.mu) > 1.0 + 1e-12:
                raise ValidationError("point mass must lie in the unit disc")
        elif self.kind is MixingKind.PND_BETA:
            if self.beta_a is None or self.beta_b is None:
                raise ValidationError("PND x Beta needs beta_a and beta_b")
            if not (self.beta_a > 0 and self.beta_b > 0):
                raise ValidationError("Beta parameters must be positive")
            if not np.any(self.mu != 0):
                raise ValidationError("PND direction mean must be nonzero")
        else:
            if self.sigma is None or self.sigma.shape != (self.r, self.r):
                raise ValidationError("restricted normal needs an r x r sigma")
            if not is_spd(self.sigma):
                raise ValidationError("sigma must be symmetric positive definite")

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "mu": self.mu.tolist()}
        if self.sigma is not None:
            out["sigma"] = self.sigma.ravel().tolist()
        if self.beta_a is not None:
            out["beta_a"] = self.beta_a
            out["beta_b"] = self.beta_b
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MixingSpec":
        try:
            kind = MixingKind(data["kind"])
            mu = np.asarray(data["mu"], dtype=float)
        except (KeyError, ValueError, TypeError) as exc:
            raise ValidationError(f"bad mixing spec: {exc}") from exc
        sigma = data.get("sigma")
        if sigma is not None:
            sigma = np.asarray(sigma, dtype=float)
            if sigma.ndim == 1:
                sigma = sigma.reshape(mu.size, mu.size)
        return cls(kind, mu, sigma=sigma, beta_a=data.get("beta_a"), beta_b=data.get("beta_b"))


@dataclass(frozen=True)
class GeneralizedChiSq:
    """Law of ``sum_j weights_j * chi2_1(noncentrality_j**2)``."""

    weights: np.ndarray
    noncentrality: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        b = np.atleast_1d(np.asarray(self.noncentrality, dtype=float))
        if w.shape != b.shape or w.ndim != 1:
            raise ValidationError("weights and noncentrality must be equal-length vectors")
        if not np.all(w > 0):
            raise ValidationError("weights must be strictly positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noncentrality", b)

    @classmethod
    def from_normal(cls, mu, sigma) -> "GeneralizedChiSq":
        """Distribution of ``Y'Y`` for ``Y ~ N(mu, sigma)``."""
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        if not is_spd(sigma):
            raise ValidationError("sigma must be symmetric positive definite")
        vals, vecs = eigh_desc(sigma)
        # Q' sigma^{-1/2} mu == D^{-1/2} Q' mu
        b = (vecs.T @ mu) / np.sqrt(vals)
        return cls(vals, b)

    def sample(self, n, rng):
        z = rng.standard_normal((n, self.weights.size)) + self.noncentrality
        return (self.weights * z**2).sum(axis=1)


def gchisq_cdf(g: GeneralizedChiSq, y: float, epsabs: float = 1e-10) -> float:
    """CDF of a generalized chi-squared variable by Imhof's formula.

    The integrand ``sin(theta(u)) / (u rho(u))`` is split at ``a``: the head
    ``[0, a]`` goes to adaptive quadrature (the ``u -> 0`` limit is finite),
    the tail is written as ``g1(u) cos(uy/2) - g2(u) sin(uy/2)`` and handled
    by QUADPACK's Fourier-integral routine, which copes with the slow
    algebraic decay of the envelope for small ``r``.
    """
    y = float(y)
    if y <= 0.0:
        return 0.0
    delta = g.weights
    b2 = g.noncentrality**2

    def phase(u):
        du = delta * u
        return 0.5 * np.sum(np.arctan(du) + b2 * du / (1.0 + du * du))

    def log_rho(u):
        du2 = (delta * u) ** 2
        return 0.25 * np.sum(np.log1p(du2)) + 0.5 * np.sum(b2 * du2 / (1.0 + du2))

    def head(u):
        if u == 0.0:
            return 0.5 * np.sum(delta * (1.0 + b2)) - 0.5 * y
        return np.sin(phase(u) - 0.5 * u * y) * np.exp(-log_rho(u)) / u

    def tail_sin(u):
        return np.sin(phase(u)) * np.exp(-log_rho(u)) / u

    def tail_cos(u):
        return np.cos(phase(u)) * np.exp(-log_rho(u)) / u

    a = 1.0 / float(delta.max())
    w = 0.5 * y
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            i0, _ = integrate.quad(head, 0.0, a, limit=200, epsabs=epsabs, epsrel=1e-10)
            i1, _ = integrate.quad(tail_sin, a, np.inf, weight="cos", wvar=w,
                                   limlst=200, epsabs=epsabs)
            i2, _ = integrate.quad(tail_cos, a, np.inf, weight="sin", wvar=w,
                                   limlst=200, epsabs=epsabs)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"Imhof integral did not converge at y={y}: {exc}") from exc
    value = 0.5 - (i0 + i1 - i2) / np.pi
    return float(min(1.0, max(0.0, value)))


def disc_probability(mu, sigma) -> float:
    """``P(Y in unit disc)`` for ``Y ~ N(mu, sigma)``.

    When the disc boundary is more than 12 standard deviations (along the
    widest axis) from the mean the answer is 0 or 1 to double precision,
    and the Imhof integral, which becomes very oscillatory there, is skipped.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    sd = float(np.sqrt(np.max(np.linalg.eigvalsh(np.atleast_2d(sigma)))))
    dist = float(np.linalg.norm(mu))
    if dist + 12.0 * sd < 1.0:
        return 1.0
    if dist - 12.0 * sd > 1.0:
        return 0.0
    return gchisq_cdf(GeneralizedChiSq.from_normal(mu, sigma), 1.0)


def normal_logpdf(y, mu, sigma):
    """Multivariate normal log-density, rows of ``y`` are points."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    mu = np.atleast_1d(mu)
    chol = np.linalg.cholesky(np.atleast_2d(sigma))
    z = np.linalg.solve(chol, (y - mu).T)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (np.sum(z * z, axis=0) + logdet + mu.size * np.log(2.0 * np.pi))


def restricted_normal_logpdf(spec: MixingSpec, y, log_normalizer: Optional[float] = None):
    """Log-density of the disc-restricted normal.

    Accepts a single point or an ``(n, r)`` array. Points outside the disc
    get ``-inf``. Pass ``log_normalizer`` to reuse a precomputed
    ``log P(Y in disc)``.
    """
    if spec.kind is not MixingKind.RESTRICTED_NORMAL:
        raise ValidationError("restricted_normal_logpdf needs a restricted-normal spec")
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1
    pts = np.atleast_2d(y.reshape(-1, spec.r) if single else y)
    if log_normalizer is None:
        log_normalizer = np.log(disc_probability(spec.mu, spec.sigma))
    out = normal_logpdf(pts, spec.mu, spec.sigma) - log_normalizer
    out[np.linalg.norm(pts, axis=1) > 1.0] = -np.inf
    return float(out[0]) if single else out


def sample_mixing(spec: MixingSpec, n: int, rng: np.random.Generator,
                  max_attempts: int = MAX_REJECTION_ATTEMPTS) -> np.ndarray:
    """Draw ``n`` points from a mixing distribution, returned as ``(n, r)``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    r = spec.r
    if spec.kind is MixingKind.POINT_MASS:
        return np.tile(spec.mu, (n, 1))
    if spec.kind is MixingKind.PND_BETA:
        y = rng.standard_normal((n, r)) + spec.mu
        radius = rng.beta(spec.beta_a, spec.beta_b, size=n)
        return y / np.linalg.norm(y, axis=1, keepdims=True) * radius[:, None]

    chol = np.linalg.cholesky(spec.sigma)
    out = np.empty((n, r))
    filled = 0
    attempts = 0
    batch = max(64, 2 * n)
    while filled < n:
        if attempts >= max_attempts:
            raise SamplerError(
                f"rejection sampler accepted {filled}/{n} after {attempts} attempts; "
                "P(Y in disc) is numerically zero"
            )
        size = min(batch, max_attempts - attempts)
        draws = rng.standard_normal((size, r)) @ chol.T + spec.mu
        attempts += size
        keep = draws[np.einsum("ij,ij->i", draws, draws) <= 1.0]
        take = min(n - filled, keep.shape[0])
        out[filled:filled + take] = keep[:take]
        filled += take
        if filled < n:
            rate = max(filled / attempts, 1.0 / attempts)
            batch = int(min(max(64, 1.2 * (n - filled) / rate), 10**6))
    return out
