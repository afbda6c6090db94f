"""KL and total-variation machinery, with Monte-Carlo and quadrature oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .distributions import SpdMatrix, norm_cdf

__all__ = [
    "DivergenceEstimate",
    "InconsistentDensityError",
    "affinity_lower_bound",
    "affinity_numeric_1d",
    "kl_gaussian",
    "kl_monte_carlo",
    "pinsker_product_tv_upper",
    "tv_equal_cov_gaussian_exact",
    "tv_numeric_1d",
]


class InconsistentDensityError(ValueError):
    pass


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    stderr: float
    samples_used: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")

    def within(self, target, sigmas=3.0):
        return abs(self.value - target) <= sigmas * self.stderr


def kl_gaussian(p, q):
    """KL(p || q) between two multivariate normals, clipped at zero."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    diff = q.mean - p.mean
    trace = float(np.trace(q.cov.solve(p.cov.array)))
    quad = float(q.cov.mahalanobis_sq(diff))
    kl = 0.5 * (trace + quad - p.dim + q.cov.logdet - p.cov.logdet)
    return max(kl, 0.0)


def kl_monte_carlo(logp, logq, sampler, m, seed):
    """Estimate KL(P || Q) as the sample mean of log p - log q under P.

    ``sampler(m, seed)`` must return m draws from P (array with one draw per
    row); ``logp`` and ``logq`` are evaluated on that array row-wise.
    """
    if m < 10_000:
        raise ValueError("kl_monte_carlo needs m >= 10^4 samples")
    x = sampler(m, seed)
    ratio = np.asarray(logp(x), dtype=np.float64) - np.asarray(logq(x), dtype=np.float64)
    bad = ~np.isfinite(ratio)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise FloatingPointError(f"non-finite log-ratio {ratio[i]} at sample {i}: {x[i]!r}")
    return DivergenceEstimate(
        value=float(ratio.mean()),
        stderr=float(ratio.std(ddof=1) / math.sqrt(m)),
        samples_used=int(m),
    )


def affinity_lower_bound(kl):
    """Lower bound (1/2) exp(-KL) on the testing affinity."""
    if kl < 0:
        raise ValueError("kl must be non-negative")
    return 0.5 * math.exp(-kl)


def _grid(lo, hi, gridpoints):
    if not hi > lo:
        raise ValueError("need lo < hi")
    if gridpoints < 10_000:
        raise ValueError("gridpoints must be >= 10^4")
    # Simpson's rule wants an even number of panels
    if gridpoints % 2 == 0:
        gridpoints += 1
    return np.linspace(lo, hi, gridpoints)


def affinity_numeric_1d(logp, logq, lo, hi, gridpoints=200_001):
    """Composite-Simpson value of the affinity, the integral of min(p, q) over [lo, hi]."""
    x = _grid(lo, hi, gridpoints)
    integrand = np.exp(np.minimum(logp(x), logq(x)))
    value = float(simpson(integrand, x=x))
    if value > 1.0 + 1e-6:
        raise InconsistentDensityError(
            f"integral of min(p, q) is {value:.9f} > 1; densities are not normalized"
        )
    return min(max(value, 0.0), 1.0)


def tv_numeric_1d(logp, logq, lo, hi, gridpoints=200_001):
    """Composite-Simpson value of (1/2) * integral |p - q|."""
    x = _grid(lo, hi, gridpoints)
    return float(0.5 * simpson(np.abs(np.exp(logp(x)) - np.exp(logq(x))), x=x))


def tv_equal_cov_gaussian_exact(mu1, mu2, cov, n=1):
    """Exact TV between N(mu1, cov)^n and N(mu2, cov)^n.

    Equals 2 Phi(sqrt(n) * D / 2) - 1 with D the Mahalanobis distance
    between the means; ``n = 1`` gives the single-sample distance.
    """
    cov = cov if isinstance(cov, SpdMatrix) else SpdMatrix(cov)
    d = np.atleast_1d(np.asarray(mu1, dtype=np.float64) - np.asarray(mu2, dtype=np.float64))
    delta = math.sqrt(float(cov.mahalanobis_sq(d)))
    # 1 - 2 Phi(-x) keeps precision for small separations
    return float(min(max(1.0 - 2.0 * norm_cdf(-math.sqrt(n) * delta / 2.0), 0.0), 1.0))


def pinsker_product_tv_upper(kl_single, n):
    """sqrt(n KL / 2): Pinsker's bound on TV between n-fold products."""
    if kl_single < 0 or n < 1:
        raise ValueError("need kl_single >= 0 and n >= 1")
    return math.sqrt(n * kl_single / 2.0)
