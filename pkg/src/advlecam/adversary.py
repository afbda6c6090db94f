"""TV budgets for Gaussian and uniform-box poisoning, and their inversion.

Each noise family gets a per-sample KL bound, turned into a bound on
TV(P^n, Q^n) through Pinsker's inequality.  The ``*_budget_for_target``
functions invert those bounds: given a product-TV level ``t`` they return
the largest noise magnitude ``c`` whose bound is exactly ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Gaussian, SpdMatrix
from .divergences import kl_gaussian, pinsker_product_tv_upper

__all__ = [
    "AdversaryBudget",
    "SignMoments",
    "arccot",
    "gaussian_budget_for_target",
    "gaussian_noise_kl_exact",
    "gaussian_noise_tv_bound",
    "sign_covariances",
    "sign_moment_matrices",
    "uniform_budget_for_target",
    "uniform_noise_kl_bound",
    "uniform_noise_tv_bound",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class AdversaryBudget:
    beta: float = 0.0
    c: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name, lo, hi in (("beta", 0.0, 1.0), ("c", 0.0, math.inf), ("t", 0.0, 1.0)):
            v = getattr(self, name)
            if not lo <= v <= hi:
                raise ValueError(f"{name} must lie in [{lo}, {hi}], got {v}")


@dataclass(frozen=True, eq=False)
class SignMoments:
    """A = E[sign(x) x^T] and B = E[sign(x) sign(x)^T] for x ~ N(0, cov).

    ``V`` holds the off-diagonal ratios S_ij / sqrt(S_ii S_jj - S_ij^2); its
    diagonal is NaN because the ratio is undefined there.
    """

    A: np.ndarray
    B: np.ndarray
    V: np.ndarray


def arccot(v):
    """arccot(v) = pi/2 - arctan(v), continuous with range (0, pi)."""
    return math.pi / 2.0 - math.atan(v)


def _as_array(cov):
    return cov.array if isinstance(cov, SpdMatrix) else np.asarray(cov, dtype=np.float64)


def _sign_sign(sij, v):
    if sij > 0:
        return 2.0 / math.pi * math.atan(v)
    return (6.0 * math.atan(v) - 2.0 * arccot(v) + math.pi) / (4.0 * math.pi)


def sign_moment_matrices(cov):
    s = _as_array(cov)
    k = s.shape[0]
    diag = np.diag(s)
    A = math.sqrt(2.0) * s / np.sqrt(math.pi * diag)[:, None]
    B = np.eye(k)
    V = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            V[i, j] = s[i, j] / math.sqrt(s[i, i] * s[j, j] - s[i, j] ** 2)
            B[i, j] = _sign_sign(s[i, j], V[i, j])
    return SignMoments(A=A, B=B, V=V)


def sign_covariances(cov):
    """(Cov(sign X1, X2), Cov(sign X1, sign X2)) for a centred bivariate normal."""
    s = _as_array(cov)
    if s.shape != (2, 2):
        raise ValueError("sign_covariances expects a 2x2 covariance")
    m = sign_moment_matrices(s)
    return float(m.A[0, 1]), float(m.B[0, 1])


def gaussian_noise_tv_bound(c, lambda_min, n):
    return c * math.sqrt(n) / (2.0 * math.sqrt(lambda_min))


def gaussian_budget_for_target(t, lambda_min, n):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return 2.0 * t * math.sqrt(lambda_min) / math.sqrt(n)


def _uniform_coefficients(cov, sign_moments):
    s = _as_array(cov)
    linear = float(np.sum(SQRT_2_OVER_PI / np.sqrt(np.diag(s))))
    B = (sign_moments or sign_moment_matrices)(s).B
    spd = cov if isinstance(cov, SpdMatrix) else SpdMatrix(s)
    quadratic = float(np.trace(B @ spd.inverse))
    return linear, quadratic


def uniform_noise_kl_bound(c, cov, sign_moments=None):
    """Per-sample KL bound for box noise of half-width ``c``.

    c * sum_i sqrt(2 / (pi S_ii)) + (c^2 / 2) * Tr(B S^{-1}).
    ``sign_moments`` substitutes the B-matrix routine (used for negative
    controls in the verification suite).
    """
    if c < 0:
        raise ValueError("c must be non-negative")
    linear, quadratic = _uniform_coefficients(cov, sign_moments)
    return c * linear + 0.5 * c * c * quadratic


def uniform_noise_tv_bound(c, cov, n, sign_moments=None):
    return pinsker_product_tv_upper(uniform_noise_kl_bound(c, cov, sign_moments), n)


def uniform_budget_for_target(t, cov, n, sign_moments=None):
    """Positive root c of (n Tr(B S^-1) / 4) c^2 + (n / 2) L c - t^2 = 0.

    Evaluated as 2q / (b + sqrt(b^2 + 4aq)), which avoids the cancellation
    in the textbook form when t is small.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 0.0:
        return 0.0
    linear, quadratic = _uniform_coefficients(cov, sign_moments)
    if quadratic <= 0:
        raise ValueError("Tr(B S^-1) must be positive")
    a = n * quadratic / 4.0
    b = n * linear / 2.0
    q = t * t
    return 2.0 * q / (b + math.sqrt(b * b + 4.0 * a * q))


def gaussian_noise_kl_exact(p, noise):
    """Exact KL(P || P + noise) for Gaussian noise."""
    q = Gaussian(p.mean + noise.shift, SpdMatrix(p.cov.array + noise.cov))
    return kl_gaussian(p, q)
