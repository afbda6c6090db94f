"""Generative models, baseline estimators and empirical risk for the three tasks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import adversary, bounds
from .distributions import (
    GaussianNoise,
    SampleBatch,
    SpdMatrix,
    UniformBoxNoise,
    _readonly,
    sample_noise,
)
from .rng import Stream, derive_seed

__all__ = [
    "BinaryClassification",
    "MeanEstimation",
    "Procrustes",
    "RiskReport",
    "TASK_NAMES",
    "empirical_risk",
    "estimate",
    "estimate_mean",
    "estimate_procrustes",
    "estimate_w",
    "generate",
    "noise_covariance",
    "risk_metric",
]


@dataclass(frozen=True, eq=False)
class MeanEstimation:
    mean: np.ndarray
    cov: SpdMatrix
    name = "mean"

    def __post_init__(self):
        cov = self.cov if isinstance(self.cov, SpdMatrix) else SpdMatrix(self.cov)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", _readonly(np.atleast_1d(self.mean)))
        if self.mean.shape != (cov.dim,):
            raise ValueError("mean and covariance dimensions differ")

    @property
    def dim(self):
        return self.cov.dim

    @property
    def truth(self):
        return self.mean


@dataclass(frozen=True, eq=False)
class BinaryClassification:
    w: np.ndarray
    cov: SpdMatrix
    name = "classification"

    def __post_init__(self):
        cov = self.cov if isinstance(self.cov, SpdMatrix) else SpdMatrix(self.cov)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "w", _readonly(np.atleast_1d(self.w)))
        if self.w.shape != (cov.dim,):
            raise ValueError("w and covariance dimensions differ")

    @property
    def dim(self):
        return self.cov.dim

    @property
    def truth(self):
        return self.w


@dataclass(frozen=True, eq=False)
class Procrustes:
    W: np.ndarray
    x_scale: float = 1.0
    eta_scale: float = 1.0
    name = "procrustes"

    def __post_init__(self):
        W = _readonly(self.W)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W must be square")
        if np.max(np.abs(W @ W.T - np.eye(W.shape[0]))) > 1e-10:
            raise ValueError("W must be orthogonal (W W^T = I within 1e-10)")
        if self.x_scale <= 0 or self.eta_scale < 0:
            raise ValueError("x_scale must be positive and eta_scale non-negative")
        object.__setattr__(self, "W", W)

    @property
    def dim(self):
        return self.W.shape[0]

    @property
    def truth(self):
        return self.W


TaskSpec = Union[MeanEstimation, BinaryClassification, Procrustes]
TASK_NAMES = ("mean", "classification", "procrustes")


def noise_covariance(task):
    """Covariance of the Gaussian the noise is added to.

    Mean: the data covariance.  Classification: the class-conditional
    covariance of x.  Procrustes: the covariance eta^2 I of y given x.  In
    the last two cases the untouched component has the same law under P and
    Q, so KL(P || Q) of the joints reduces to the KL for this Gaussian.
    """
    if isinstance(task, Procrustes):
        return SpdMatrix(task.eta_scale ** 2 * np.eye(task.dim))
    return task.cov


def generate(task, noise, n, seed):
    """Draw ``n`` observations of ``task`` with ``noise`` added.

    Stream order: the task's Gaussian draws first (labels before features for
    classification; x before eta for Procrustes), then the noise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if noise is not None and noise.dim != task.dim:
        raise ValueError("noise and task dimensions differ")
    stream = Stream(seed)
    k = task.dim
    if isinstance(task, MeanEstimation):
        x = task.mean + stream.standard_normal((n, k)) @ task.cov.cholesky.T
        if noise is not None:
            x = x + sample_noise(noise, n, stream)
        return SampleBatch(x)
    if isinstance(task, BinaryClassification):
        y = stream.rademacher(n)
        x = y[:, None] * task.w + stream.standard_normal((n, k)) @ task.cov.cholesky.T
        if noise is not None:
            x = x + sample_noise(noise, n, stream)
        return SampleBatch(x, labels=y)
    if isinstance(task, Procrustes):
        x = task.x_scale * stream.standard_normal((n, k))
        y = x @ task.W.T + task.eta_scale * stream.standard_normal((n, k))
        if noise is not None:
            y = y + sample_noise(noise, n, stream)
        return SampleBatch(x, targets=y)
    raise TypeError(f"unknown task {task!r}")


def estimate_mean(batch):
    return batch.points.mean(axis=0)


def estimate_w(batch):
    """Label-weighted mean (1/n) sum y_i x_i, unbiased for w."""
    if batch.labels is None:
        raise ValueError("estimate_w needs a labelled batch")
    return (batch.labels[:, None] * batch.points).mean(axis=0)


def estimate_procrustes(batch):
    """Orthogonal W maximising Tr(W^T M), M = sum_i y_i x_i^T.

    Reflections are allowed: the solution is U V^T from the SVD of M with
    no determinant correction.
    """
    if batch.targets is None:
        raise ValueError("estimate_procrustes needs paired (x, y) rows")
    x, y = batch.points, batch.targets
    k = x.shape[1]
    if x.shape[0] < k:
        raise ValueError(f"need at least k={k} pairs, got {x.shape[0]}")
    M = y.T @ x
    U, s, Vt = np.linalg.svd(M)
    if s[-1] <= s[0] * k * np.finfo(float).eps:
        raise np.linalg.LinAlgError(
            "cross-moment matrix is rank deficient; draw more samples (larger n)"
        )
    return U @ Vt


def estimate(task, batch):
    if isinstance(task, MeanEstimation):
        return estimate_mean(batch)
    if isinstance(task, BinaryClassification):
        return estimate_w(batch)
    return estimate_procrustes(batch)


def risk_metric(task, est):
    """Loss of ``est``: l2 distance (mean), squared l2 (w), squared Frobenius (W)."""
    d = np.asarray(est) - task.truth
    if isinstance(task, MeanEstimation):
        return float(np.sqrt(np.sum(d * d)))
    return float(np.sum(d * d))


def noise_tv_upper(task, noise, n):
    """Per-endpoint bound on TV(P^n, Q^n) for the given noise, capped at 1."""
    if noise is None:
        return 0.0
    cov = noise_covariance(task)
    if isinstance(noise, GaussianNoise):
        tv = adversary.gaussian_noise_tv_bound(noise.magnitude, cov.min_eigenvalue, n)
    elif isinstance(noise, UniformBoxNoise):
        tv = adversary.uniform_noise_tv_bound(noise.half_width, cov, n)
    else:
        raise TypeError(f"unsupported noise {noise!r}")
    return min(tv, 1.0)


def lower_bound(task, n, delta):
    if isinstance(task, MeanEstimation):
        return bounds.mean_estimation_bound(task.cov.min_eigenvalue, n, delta)
    if isinstance(task, BinaryClassification):
        return bounds.classification_bound(task.cov.min_eigenvalue, n, delta)
    return bounds.procrustes_bound(task.eta_scale, task.x_scale, n, task.dim, delta)


@dataclass(frozen=True)
class RiskReport:
    task: str
    noise: Optional[object]
    n: int
    replicates: int
    empirical_risk: float
    stderr: float
    lower_bound_at_delta0: float
    lower_bound_at_delta_hi: float
    delta_hi: float


def empirical_risk(task, noise, n, replicates, seed, beta=1.0, scenario_id=0):
    """Mean and standard error of the task loss over independent replicates.

    Replicate ``r`` draws from ``derive_seed(seed, scenario_id, r)``.  The reported
    ``delta_hi`` is min(2 beta, 2 * per-endpoint TV bound of ``noise``).
    """
    if replicates < 30:
        raise ValueError("need at least 30 replicates")
    losses = np.empty(replicates)
    for r in range(replicates):
        batch = generate(task, noise, n, derive_seed(seed, scenario_id, r))
        losses[r] = risk_metric(task, estimate(task, batch))
    delta_hi = min(2.0 * beta, 2.0 * noise_tv_upper(task, noise, n))
    return RiskReport(
        task=task.name,
        noise=noise,
        n=n,
        replicates=replicates,
        empirical_risk=float(losses.mean()),
        stderr=float(losses.std(ddof=1) / math.sqrt(replicates)),
        lower_bound_at_delta0=lower_bound(task, n, 0.0),
        lower_bound_at_delta_hi=lower_bound(task, n, delta_hi),
        delta_hi=delta_hi,
    )
