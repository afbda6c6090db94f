"""Adversarial two-point (Le Cam) lower bounds.

The general bound is ``separation / 4 * (affinity + delta)`` where
``affinity`` is the overlap of the two clean product laws and ``delta`` is
the adversarial slack, at most twice the TV budget.  The three task bounds
below are that expression evaluated at fixed two-point pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BoundResult",
    "InadmissibleError",
    "classification_bound",
    "classification_kl",
    "delta_interval",
    "lecam_adversarial_general",
    "mean_estimation_bound",
    "optimize_separation_linear",
    "optimize_separation_quadratic",
    "procrustes_bound",
    "procrustes_kl",
    "procrustes_kl_proof",
    "task_bound_result",
]

INV_SQRT_E = math.exp(-0.5)
INV_E = math.exp(-1.0)
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class InadmissibleError(ValueError):
    pass


@dataclass(frozen=True)
class BoundResult:
    scenario: str
    separation: float
    affinity_term: float
    delta_interval: tuple
    bound_at_delta_lo: float
    bound_at_delta_hi: float

    def __post_init__(self):
        if self.bound_at_delta_hi < self.bound_at_delta_lo:
            raise ValueError("bound must be non-decreasing in delta")


def lecam_adversarial_general(separation, affinity, delta):
    """separation / 4 * (affinity + delta); delta = 0 is classical Le Cam."""
    if not 0.0 <= affinity <= 1.0:
        raise ValueError(f"affinity must lie in [0, 1], got {affinity}")
    if not 0.0 <= delta <= 2.0:
        raise ValueError(f"delta must lie in [0, 2], got {delta}")
    if separation < 0:
        raise ValueError("separation must be non-negative")
    return separation / 4.0 * (affinity + delta)


def delta_interval(beta):
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return (0.0, 2.0 * beta)


def _check_n(n):
    if n < 1:
        raise ValueError("n must be >= 1")


def mean_estimation_bound(lambda_min, n, delta):
    _check_n(n)
    return math.sqrt(lambda_min) / (8.0 * math.sqrt(n)) * (INV_SQRT_E + 2.0 * delta)


def classification_bound(lambda_min, n, delta):
    _check_n(n)
    return lambda_min / (8.0 * n) * (INV_SQRT_E + 2.0 * delta)


def check_procrustes_admissible(eta_scale, x_scale, n, k):
    ratio = eta_scale ** 2 / x_scale ** 2
    if ratio > 4.0 * k * n:
        raise InadmissibleError(
            f"Procrustes bound requires eta^2 / sigma^2 <= 4 k n "
            f"({ratio:.6g} > {4 * k * n}); the optimal separation is not reachable"
        )


def procrustes_bound(eta_scale, x_scale, n, k, delta):
    """eta^2 / (8 n sigma^2) * (1/e + 2 delta)."""
    _check_n(n)
    check_procrustes_admissible(eta_scale, x_scale, n, k)
    return eta_scale ** 2 / (8.0 * n * x_scale ** 2) * (INV_E + 2.0 * delta)


def _golden_max(f, lo, hi, rtol=1e-10, scan=1024):
    """Maximise ``f`` on [lo, hi].

    A coarse scan picks the best cell, golden-section refines inside the
    two cells around it, and the endpoints are compared at the end.  The
    objectives here can have an interior bump and a rising tail, so plain
    golden-section over the whole interval may stall on the wrong mode.
    """
    grid = np.linspace(lo, hi, scan + 1)
    vals = np.array([f(x) for x in grid])
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, scan)]
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * max(abs(a), abs(b), 1e-300):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = 0.5 * (a + b)
    candidates = [(f(best), best), (f(lo), lo), (f(hi), hi)]
    value, x = max(candidates, key=lambda p: p[0])
    return x, value


def optimize_separation_quadratic(alpha, delta, u_max=None):
    """Maximise u/8 * (exp(-alpha u^2) + 2 delta) over u >= 0.

    With ``delta == 0`` the optimum is 1/sqrt(2 alpha) in closed form
    (clipped to ``u_max`` when given).  For ``delta > 0`` the objective grows
    without bound, so ``u_max`` is required.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def f(u):
        return u / 8.0 * (math.exp(-alpha * u * u) + 2.0 * delta)

    if delta == 0:
        u = 1.0 / math.sqrt(2.0 * alpha)
        if u_max is None or u <= u_max:
            return u, f(u)
        return float(u_max), f(u_max)
    if u_max is None or math.isinf(u_max):
        raise ValueError("objective is unbounded in u for delta > 0; pass a finite u_max")
    return _golden_max(f, 0.0, float(u_max))


def optimize_separation_linear(a, delta, v_max):
    """Maximise v/8 * (exp(-a v) + 2 delta) over 0 <= v <= v_max.

    The unconstrained optimum at ``delta == 0`` is v = 1/a.
    """
    if a <= 0 or v_max <= 0:
        raise ValueError("a and v_max must be positive")

    def g(v):
        return v / 8.0 * (math.exp(-a * v) + 2.0 * delta)

    if delta == 0 and 1.0 / a <= v_max:
        v = 1.0 / a
        return v, g(v)
    return _golden_max(g, 0.0, float(v_max))


def classification_kl(w1, w2, cov):
    """KL between the (x, Y) joints for label-conditional means Y w1, Y w2."""
    d = np.asarray(w1, dtype=np.float64) - np.asarray(w2, dtype=np.float64)
    return 0.5 * float(cov.mahalanobis_sq(d))


def _check_orthogonal(W, name):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"{name} must be square")
    err = np.max(np.abs(W @ W.T - np.eye(W.shape[0])))
    if err > 1e-8:
        raise ValueError(f"{name} is not orthogonal (max |W W^T - I| = {err:.3g})")
    return W


def procrustes_separation(W1, W2):
    """v = 2k - 2 Tr(W1^T W2) = ||W1 - W2||_F^2, in [0, 4k] for orthogonal inputs."""
    W1 = _check_orthogonal(W1, "W1")
    W2 = _check_orthogonal(W2, "W2")
    return 2.0 * W1.shape[0] - 2.0 * float(np.trace(W1.T @ W2))


def procrustes_kl(W1, W2, x_scale, eta_scale):
    """Exact KL between the (x, y) joints under W1 and W2.

    E_x ||(W1 - W2) x||^2 / (2 eta^2) = sigma^2 ||W1 - W2||_F^2 / (2 eta^2).
    """
    W1 = _check_orthogonal(W1, "W1")
    W2 = _check_orthogonal(W2, "W2")
    return x_scale ** 2 * float(np.sum((W1 - W2) ** 2)) / (2.0 * eta_scale ** 2)


def procrustes_kl_proof(W1, W2, x_scale, eta_scale):
    """sigma^2 / eta^2 * ||W1 - W2||_F^2, twice the exact KL.

    This is the quantity that produces the 1/e constant in
    :func:`procrustes_bound`; as an over-estimate of the KL it still yields
    a valid lower bound.
    """
    return 2.0 * procrustes_kl(W1, W2, x_scale, eta_scale)


def task_bound_result(task, n, beta=0.0, *, lambda_min=None, eta_scale=None,
                      x_scale=None, k=None):
    """BoundResult for one task at the fixed two-point pair behind its formula."""
    lo, hi = delta_interval(beta)
    if task == "mean":
        separation = math.sqrt(lambda_min / n)
        affinity = 0.5 * INV_SQRT_E
        fn = lambda d: mean_estimation_bound(lambda_min, n, d)  # noqa: E731
    elif task == "classification":
        separation = lambda_min / n
        affinity = 0.5 * INV_SQRT_E
        fn = lambda d: classification_bound(lambda_min, n, d)  # noqa: E731
    elif task == "procrustes":
        separation = eta_scale ** 2 / (n * x_scale ** 2)
        affinity = 0.5 * INV_E
        fn = lambda d: procrustes_bound(eta_scale, x_scale, n, k, d)  # noqa: E731
    else:
        raise ValueError(f"unknown task {task!r}")
    return BoundResult(
        scenario=task,
        separation=separation,
        affinity_term=affinity,
        delta_interval=(lo, hi),
        bound_at_delta_lo=fn(lo),
        bound_at_delta_hi=fn(hi),
    )
