"""Covariance matrices, Gaussians, noise-injected Gaussians and samplers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import log_ndtr, logsumexp, ndtr

from .rng import Stream

__all__ = [
    "Gaussian",
    "GaussianNoise",
    "NotPositiveDefiniteError",
    "PoisonedModel",
    "SampleBatch",
    "SpdMatrix",
    "UniformBoxNoise",
    "conditional_gaussian",
    "gaussian_log_density",
    "mc_log_density",
    "min_eigenvalue",
    "norm_cdf",
    "poisoned_log_density",
    "random_orthogonal",
    "sample_noise",
    "sample_poisoned",
]

LOG_2PI = math.log(2.0 * math.pi)


class NotPositiveDefiniteError(ValueError):
    pass


def norm_cdf(x):
    """Standard normal CDF (scipy's ``ndtr``, accurate to a few ulp)."""
    return ndtr(x)


def _readonly(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class SpdMatrix:
    """Symmetric positive-definite matrix with a cached Cholesky factor.

    Construction validates symmetry (entrywise, relative to ``max(1, |S_ij|)``
    at 1e-12) and positive definiteness; failures raise
    :class:`NotPositiveDefiniteError` naming the violated property.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise NotPositiveDefiniteError(
                f"covariance must be a non-empty square matrix, got shape {a.shape}"
            )
        if not np.all(np.isfinite(a)):
            raise NotPositiveDefiniteError("covariance has non-finite entries")
        asym = np.abs(a - a.T)
        if np.any(asym > 1e-12 * np.maximum(1.0, np.abs(a))):
            i, j = np.unravel_index(np.argmax(asym), a.shape)
            raise NotPositiveDefiniteError(
                f"covariance is not symmetric: |S[{i},{j}] - S[{j},{i}]| = {asym[i, j]:.3g}"
            )
        a = 0.5 * (a + a.T)
        try:
            chol = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(
                "covariance is not positive definite: Cholesky factorization failed"
            ) from None
        self._a = _readonly(a)
        self._chol = _readonly(chol)
        if self.min_eigenvalue <= 0.0:
            raise NotPositiveDefiniteError(
                f"covariance is not positive definite: min eigenvalue {self.min_eigenvalue:.3g}"
            )

    @classmethod
    def identity(cls, k):
        return cls(np.eye(k))

    @property
    def dim(self):
        return self._a.shape[0]

    @property
    def array(self):
        return self._a

    @property
    def cholesky(self):
        """Lower-triangular ``L`` with ``L @ L.T == array``."""
        return self._chol

    @cached_property
    def eigenvalues(self):
        return _readonly(np.linalg.eigvalsh(self._a))

    @cached_property
    def min_eigenvalue(self):
        return float(self.eigenvalues[0])

    @cached_property
    def min_eigenvector(self):
        _, vecs = np.linalg.eigh(self._a)
        v = vecs[:, 0]
        # fix the sign so the choice is reproducible
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        return _readonly(v)

    @cached_property
    def logdet(self):
        return float(2.0 * np.sum(np.log(np.diag(self._chol))))

    @cached_property
    def inverse(self):
        return _readonly(self.solve(np.eye(self.dim)))

    @cached_property
    def is_diagonal(self):
        return bool(np.all(self._a == np.diag(np.diag(self._a))))

    def solve(self, b):
        """``array^{-1} @ b`` via the Cholesky factor."""
        return cho_solve((self._chol, True), np.asarray(b, dtype=np.float64))

    def mahalanobis_sq(self, d):
        """Row-wise ``d^T S^{-1} d`` for a vector or an (m, k) array."""
        d = np.asarray(d, dtype=np.float64)
        z = solve_triangular(self._chol, d.T, lower=True)
        return np.sum(z * z, axis=0)

    def __repr__(self):
        return f"SpdMatrix({self._a.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, SpdMatrix) and np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash(self._a.tobytes())


def min_eigenvalue(m):
    return m.min_eigenvalue


def _as_spd(cov):
    return cov if isinstance(cov, SpdMatrix) else SpdMatrix(cov)


@dataclass(frozen=True, eq=False)
class Gaussian:
    mean: np.ndarray
    cov: SpdMatrix

    def __post_init__(self):
        cov = _as_spd(self.cov)
        mean = _readonly(np.atleast_1d(self.mean))
        if mean.shape != (cov.dim,):
            raise ValueError(f"mean has shape {mean.shape}, covariance is {cov.dim}x{cov.dim}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.cov.dim

    @classmethod
    def standard(cls, k):
        return cls(np.zeros(k), SpdMatrix.identity(k))


@dataclass(frozen=True, eq=False)
class GaussianNoise:
    """Additive N(shift, scale * shift shift^T) noise.

    ``scale`` in [0, 1] covers exactly the covariances dominated by
    ``shift shift^T`` with range in span(shift).
    """

    shift: np.ndarray
    scale: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shift", _readonly(np.atleast_1d(self.shift)))
        if not 0.0 <= self.scale <= 1.0:
            raise ValueError(f"scale must lie in [0, 1], got {self.scale}")

    @property
    def dim(self):
        return self.shift.shape[0]

    @property
    def magnitude(self):
        return float(np.linalg.norm(self.shift))

    @property
    def cov(self):
        return self.scale * np.outer(self.shift, self.shift)


@dataclass(frozen=True)
class UniformBoxNoise:
    """Additive noise uniform on the box [-half_width, half_width]^dim."""

    half_width: float
    dim: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


NoiseSpec = Union[GaussianNoise, UniformBoxNoise]


@dataclass(frozen=True, eq=False)
class PoisonedModel:
    base: Gaussian
    noise: Optional[NoiseSpec] = None

    def __post_init__(self):
        if self.noise is not None and self.noise.dim != self.base.dim:
            raise ValueError(
                f"noise dimension {self.noise.dim} does not match base dimension {self.base.dim}"
            )

    @property
    def dim(self):
        return self.base.dim


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    labels: Optional[np.ndarray] = None
    targets: Optional[np.ndarray] = None  # paired responses (Procrustes y rows)
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.points.shape[0]


def gaussian_log_density(g, x):
    """log N(x; mean, cov) for a k-vector or each row of an (m, k) array."""
    x = np.asarray(x, dtype=np.float64)
    quad = g.cov.mahalanobis_sq(x - g.mean)
    out = -0.5 * (quad + g.dim * LOG_2PI + g.cov.logdet)
    return float(out) if x.ndim == 1 else out


def sample_noise(noise, n, stream):
    """Draw ``n`` noise offsets from ``stream`` as an (n, k) array."""
    if isinstance(noise, GaussianNoise):
        z = stream.standard_normal(n)
        return noise.shift[None, :] * (math.sqrt(noise.scale) * z)[:, None] + noise.shift
    if isinstance(noise, UniformBoxNoise):
        u = stream.uniform((n, noise.dim))
        return noise.half_width * (2.0 * u - 1.0)
    raise TypeError(f"unsupported noise spec {noise!r}")


def sample_poisoned(q, n, seed):
    """Draw ``n`` rows of base Gaussian plus noise.

    Base normals are drawn first (n*k values, row-major), then the noise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    stream = seed if isinstance(seed, Stream) else Stream(seed)
    base = q.base
    z = stream.standard_normal((n, base.dim))
    points = base.mean + z @ base.cov.cholesky.T
    if q.noise is not None:
        points = points + sample_noise(q.noise, n, stream)
    return SampleBatch(points)


def _log_box_mass(lo, hi):
    # log(Phi(hi) - Phi(lo)) = log Phi(a) + log(1 - Phi(b)/Phi(a)), reflected so
    # that a, b sit in the lower tail where log_ndtr keeps full precision.
    upper = lo > 0
    a = np.where(upper, -lo, hi)
    b = np.where(upper, -hi, lo)
    la = log_ndtr(a)
    return la + np.log(-np.expm1(log_ndtr(b) - la))


def poisoned_log_density(q, x):
    """Exact log-density of ``q`` at a point or each row of an array.

    Uniform-box noise is only supported in closed form for a diagonal base
    covariance; use :func:`mc_log_density` otherwise.
    """
    x = np.asarray(x, dtype=np.float64)
    base, noise = q.base, q.noise
    if noise is None:
        return gaussian_log_density(base, x)
    if isinstance(noise, GaussianNoise):
        shifted = Gaussian(base.mean + noise.shift, SpdMatrix(base.cov.array + noise.cov))
        return gaussian_log_density(shifted, x)
    if not base.cov.is_diagonal:
        raise ValueError(
            "exact density unavailable for uniform-box noise with a non-diagonal "
            "covariance; use mc_log_density instead"
        )
    eps = noise.half_width
    sd = np.sqrt(np.diag(base.cov.array))
    d = x - base.mean
    lo = (d - eps) / sd
    hi = (d + eps) / sd
    out = np.sum(_log_box_mass(lo, hi), axis=-1) - base.dim * math.log(2.0 * eps)
    return float(out) if x.ndim == 1 else out


def mc_log_density(q, x, m, seed):
    """Monte-Carlo log-density: log mean_j N(x - u_j; base) over m noise draws.

    Evaluated with a log-sum-exp shift, so far-tail points stay finite.
    """
    if m < 1000:
        raise ValueError("mc_log_density needs m >= 1000 noise draws")
    if q.noise is None:
        return gaussian_log_density(q.base, x)
    x = np.asarray(x, dtype=np.float64)
    u = sample_noise(q.noise, m, Stream(seed))
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    out = np.empty(xs.shape[0])
    for i, row in enumerate(xs):
        out[i] = logsumexp(gaussian_log_density(q.base, row - u)) - math.log(m)
    return float(out[0]) if single else out


def conditional_gaussian(mu1, mu2, s11, s12, s21, s22, a):
    """Law of x2 given x1 = a for a jointly Gaussian (x1, x2)."""
    mu1, mu2, a = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (mu1, mu2, a))
    s11, s12, s21, s22 = (np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in (s11, s12, s21, s22))
    SpdMatrix(np.block([[s11, s12], [s21, s22]]))
    s11 = SpdMatrix(s11)
    gain = s11.solve(s12).T  # s21 @ s11^{-1}, using s21 = s12^T
    if not np.allclose(s21, s12.T, rtol=1e-12, atol=1e-12):
        gain = s21 @ s11.inverse
    mean = mu2 + gain @ (a - mu1)
    cov = s22 - gain @ s12
    return Gaussian(mean, SpdMatrix(0.5 * (cov + cov.T)))


def random_orthogonal(k, seed):
    """Haar-distributed orthogonal k x k matrix (QR with sign-corrected R)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    stream = seed if isinstance(seed, Stream) else Stream(seed)
    g = stream.standard_normal((k, k))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs[None, :]
