"""Experiment configuration and scenario construction."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .. import adversary
from ..distributions import GaussianNoise, SpdMatrix, UniformBoxNoise, random_orthogonal
from ..rng import MASK64, derive_seed
from ..tasks import BinaryClassification, MeanEstimation, Procrustes, noise_covariance

__all__ = ["ConfigError", "ExperimentConfig", "SCENARIOS", "build_scenario", "load_config"]

# Fixed ids keep per-row seeds stable when the scenario list is reordered.
SCENARIOS = {
    "mean-gaussian": 1,
    "mean-uniform": 2,
    "classification-gaussian": 3,
    "classification-uniform": 4,
    "procrustes-gaussian": 5,
    "procrustes-uniform": 6,
}
_TASK_SEED_ID = 0xFFFF


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenarios: list = field(default_factory=lambda: list(SCENARIOS))
    k: int = 2
    n_grid: list = field(default_factory=lambda: [10, 100, 1000])
    replicates: int = 500
    t: float = 0.05
    beta: Optional[float] = None
    seed: int = 20240601
    out_dir: str = "results"
    mc_samples: int = 200_000
    cov_rho: float = 0.5
    x_scale: float = 1.0
    eta_scale: float = 1.0
    record_timing: bool = False

    def validate(self):
        unknown = [s for s in self.scenarios if s not in SCENARIOS]
        if unknown or not self.scenarios:
            raise ConfigError(
                f"unknown scenarios {unknown}; choose from {sorted(SCENARIOS)}"
                if unknown else "scenario list is empty"
            )
        if not isinstance(self.k, int) or not 1 <= self.k <= 32:
            raise ConfigError(f"k must be an integer in [1, 32], got {self.k!r}")
        if not self.n_grid or any(not isinstance(n, int) or n < 1 for n in self.n_grid):
            raise ConfigError(f"n_grid must be positive integers, got {self.n_grid!r}")
        if not isinstance(self.replicates, int) or self.replicates < 30:
            raise ConfigError(f"replicates must be an integer >= 30, got {self.replicates!r}")
        if not 0.0 <= self.t <= 1.0:
            raise ConfigError(f"t must lie in [0, 1], got {self.t}")
        if self.beta is not None and not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0 <= int(self.seed) <= MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.mc_samples < 10_000:
            raise ConfigError("mc_samples must be >= 10^4")
        if not -1.0 < self.cov_rho < 1.0:
            raise ConfigError("cov_rho must lie in (-1, 1)")
        if self.x_scale <= 0 or self.eta_scale <= 0:
            raise ConfigError("x_scale and eta_scale must be positive")
        return self

    @property
    def delta_hi(self):
        """2t, further capped by 2 beta when a single-sample budget is given."""
        d = 2.0 * self.t
        if self.beta is not None:
            d = min(d, 2.0 * self.beta)
        return d

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return ExperimentConfig.from_dict(data)


def base_covariance(cfg):
    """AR(1) covariance rho^|i-j|."""
    idx = np.arange(cfg.k)
    return SpdMatrix(cfg.cov_rho ** np.abs(idx[:, None] - idx[None, :]))


def build_task(cfg, task_name):
    k = cfg.k
    if task_name == "mean":
        return MeanEstimation(np.ones(k), base_covariance(cfg))
    if task_name == "classification":
        return BinaryClassification(np.ones(k) / math.sqrt(k), base_covariance(cfg))
    W = random_orthogonal(k, derive_seed(cfg.seed, _TASK_SEED_ID, 0))
    return Procrustes(W, x_scale=cfg.x_scale, eta_scale=cfg.eta_scale)


def calibrate_noise(task, noise_kind, t, n):
    """Noise whose per-endpoint product-TV bound equals ``t``.

    Gaussian: mean shift of norm c along the least-variance direction.
    Uniform: box half-width c.  Returns (noise or None, c, tv_upper).
    """
    cov = noise_covariance(task)
    if noise_kind == "gaussian":
        c = adversary.gaussian_budget_for_target(t, cov.min_eigenvalue, n)
        tv = adversary.gaussian_noise_tv_bound(c, cov.min_eigenvalue, n)
        noise = GaussianNoise(c * np.asarray(cov.min_eigenvector), 0.0) if c > 0 else None
    elif noise_kind == "uniform":
        c = adversary.uniform_budget_for_target(t, cov, n)
        tv = adversary.uniform_noise_tv_bound(c, cov, n)
        noise = UniformBoxNoise(c, task.dim) if c > 0 else None
    else:
        raise ConfigError(f"unknown noise kind {noise_kind!r}")
    return noise, c, tv


def build_scenario(cfg, name):
    task_name, noise_kind = name.split("-")
    return build_task(cfg, task_name), noise_kind
