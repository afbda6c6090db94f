"""Cross-module oracle checks with observed-vs-expected margins.

Each check returns one or more :class:`CheckResult` rows.  ``margin`` is
signed so that ``margin >= 0`` means the check passed; it is the distance to
the tolerance edge in the units of the quantity being checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import adversary, bounds, divergences, tasks
from ..distributions import (
    Gaussian,
    GaussianNoise,
    PoisonedModel,
    SpdMatrix,
    UniformBoxNoise,
    gaussian_log_density,
    poisoned_log_density,
    random_orthogonal,
    sample_poisoned,
)
from ..rng import Stream, derive_seed

__all__ = ["CheckResult", "CHECKS", "format_results", "verify_suite"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    case: str
    observed: float
    expected: float
    tolerance: float
    margin: float

    @property
    def passed(self):
        return bool(self.margin >= 0)


def _close(name, case, observed, expected, tol):
    return CheckResult(name, case, observed, expected, tol, tol - abs(observed - expected))


def _at_most(name, case, observed, limit, tol=0.0):
    return CheckResult(name, case, observed, limit, tol, limit + tol - observed)


def _at_least(name, case, observed, floor, tol=0.0):
    return CheckResult(name, case, observed, floor, tol, observed - floor + tol)


def _random_spd(stream, k, cond_max=100.0):
    q = random_orthogonal(k, stream)
    log_eigs = stream.uniform(k) * math.log(cond_max)
    log_eigs -= log_eigs.mean()
    return SpdMatrix(q @ np.diag(np.exp(log_eigs)) @ q.T)


def _random_correlation(stream, k):
    a = stream.standard_normal((k, k + 1))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    return c / np.outer(d, d)


# ---------------------------------------------------------------- divergences

def check_kl_oracle(m=200_000, seed=1, pairs=10):
    out = []
    for i in range(pairs):
        stream = Stream(derive_seed(seed, 101, i))
        k = 1 + int(stream.uniform() * 3)
        p = Gaussian(stream.standard_normal(k), _random_spd(stream, k))
        q = Gaussian(stream.standard_normal(k) * 0.5, _random_spd(stream, k))
        exact = divergences.kl_gaussian(p, q)
        est = divergences.kl_monte_carlo(
            lambda x: gaussian_log_density(p, x),
            lambda x: gaussian_log_density(q, x),
            lambda mm, s: sample_poisoned(PoisonedModel(p), mm, s).points,
            m,
            derive_seed(seed, 102, i),
        )
        tol = max(3.0 * est.stderr, 0.02 * exact)
        out.append(_close("kl_closed_form_vs_mc", f"pair {i} (k={k})", est.value, exact, tol))
    return out


def check_affinity_sweep(separations=(0.0, 0.5, 1.0, 2.0, 4.0)):
    out = []
    std = Gaussian.standard(1)
    for s in separations:
        other = Gaussian([s], SpdMatrix.identity(1))
        aff = divergences.affinity_numeric_1d(
            lambda x: gaussian_log_density(std, x[:, None]),
            lambda x: gaussian_log_density(other, x[:, None]),
            -12.0, s + 12.0, 400_001,
        )
        lower = divergences.affinity_lower_bound(divergences.kl_gaussian(std, other))
        tv = divergences.tv_equal_cov_gaussian_exact([0.0], [s], SpdMatrix.identity(1))
        out.append(_at_least("affinity_ge_half_exp_neg_kl", f"sep={s}", aff, lower))
        out.append(_close("affinity_eq_one_minus_tv", f"sep={s}", aff, 1.0 - tv, 1e-6))
    return out


def check_tv_ranges():
    out = []
    kls = [0.0, 1e-4, 0.01, 0.1, 0.5, 2.0]
    ns = [1, 2, 10, 100]
    worst = 0.0
    for i, kl in enumerate(kls):
        for j, n in enumerate(ns):
            v = divergences.pinsker_product_tv_upper(kl, n)
            if i:
                worst = min(worst, v - divergences.pinsker_product_tv_upper(kls[i - 1], n))
            if j:
                worst = min(worst, v - divergences.pinsker_product_tv_upper(kl, ns[j - 1]))
    out.append(_at_least("pinsker_monotone", "kl x n grid", worst, 0.0))
    tvs = [divergences.tv_equal_cov_gaussian_exact([0.0], [s], SpdMatrix.identity(1), n)
           for s in (0.0, 0.1, 1.0, 10.0, 1e3) for n in (1, 100)]
    out.append(_at_least("tv_in_unit_interval", "min", min(tvs), 0.0))
    out.append(_at_most("tv_in_unit_interval", "max", max(tvs), 1.0))
    return out


# ---------------------------------------------------------------- adversary

def check_sign_moments(m=200_000, seed=2, rhos=(-0.8, -0.3, 0.0, 0.3, 0.8), sign_moments=None):
    fn = sign_moments or adversary.sign_moment_matrices
    out = []
    for i, rho in enumerate(rhos):
        cov = SpdMatrix([[1.0, rho], [rho, 1.0]])
        x = sample_poisoned(PoisonedModel(Gaussian(np.zeros(2), cov)), m, derive_seed(seed, 201, i)).points
        s = np.sign(x)
        mom = fn(cov.array)
        out.append(_close("cov_sign_x1_x2_vs_mc", f"rho={rho}", float(np.mean(s[:, 0] * x[:, 1])),
                          float(mom.A[0, 1]), 0.01))
        out.append(_close("cov_sign_sign_vs_mc", f"rho={rho}", float(np.mean(s[:, 0] * s[:, 1])),
                          float(mom.B[0, 1]), 0.01))
    return out


def check_branch_consistency(points=199, sign_moments=None):
    fn = sign_moments or adversary.sign_moment_matrices
    worst, worst_rho = 0.0, 0.0
    for rho in np.linspace(-0.99, 0.99, points):
        b = fn(np.array([[1.0, rho], [rho, 1.0]])).B[0, 1]
        err = abs(b - 2.0 / math.pi * math.asin(rho))
        if err > worst:
            worst, worst_rho = err, rho
    return [_at_most("b_branches_equal_arcsin", f"worst rho={worst_rho:.3f}", worst, 1e-12)]


def check_b_psd(count=100, seed=3, sign_moments=None):
    fn = sign_moments or adversary.sign_moment_matrices
    worst = math.inf
    for i in range(count):
        stream = Stream(derive_seed(seed, 301, i))
        k = 2 + i % 3
        B = fn(_random_correlation(stream, k)).B
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (B + B.T))[0]))
    return [_at_least("b_matrix_psd", f"{count} correlation matrices", worst, -1e-8)]


def check_noise_kl_monotone(steps=20):
    p = Gaussian([0.0, 0.0], SpdMatrix([[2.0, 0.3], [0.3, 1.0]]))
    shift = np.array([0.4, -0.2])
    kls = [adversary.gaussian_noise_kl_exact(p, GaussianNoise(shift, s))
           for s in np.linspace(0.0, 1.0, steps)]
    worst_increase = max(b - a for a, b in zip(kls, kls[1:]))
    cap = 0.5 * float(p.cov.mahalanobis_sq(shift))
    return [
        _at_most("gaussian_noise_kl_nonincreasing_in_scale", f"{steps}-point sweep",
                 worst_increase, 0.0, 1e-15),
        _at_most("gaussian_noise_kl_below_shift_only", "s=0 cap", kls[0], cap, 1e-15),
    ]


def check_gaussian_budget(ts=(0.01, 0.05, 0.1, 0.3), ns=(10, 100)):
    out = []
    cov = SpdMatrix([[2.0, 0.6], [0.6, 1.0]])
    lam = cov.min_eigenvalue
    for t in ts:
        for n in ns:
            c = adversary.gaussian_budget_for_target(t, lam, n)
            shift = c * np.asarray(cov.min_eigenvector)
            tv = divergences.tv_equal_cov_gaussian_exact(np.zeros(2), shift, cov, n)
            out.append(_at_most("gaussian_budget_sound", f"t={t} n={n}", tv, t))
            out.append(_close("gaussian_budget_roundtrip", f"t={t} n={n}",
                              adversary.gaussian_noise_tv_bound(c, lam, n), t, 1e-12))
    return out


def check_uniform_budget(m=200_000, seed=4, cs=(0.05, 0.1, 0.2), sign_moments=None):
    out = []
    models = {"1-D": SpdMatrix([[1.0]]), "diag 2-D": SpdMatrix(np.diag([1.0, 2.5]))}
    for label, cov in models.items():
        k = cov.dim
        p = Gaussian(np.zeros(k), cov)
        for j, c in enumerate(cs):
            q = PoisonedModel(p, UniformBoxNoise(c, k))
            est = divergences.kl_monte_carlo(
                lambda x: gaussian_log_density(p, x),
                lambda x: poisoned_log_density(q, x),
                lambda mm, s: sample_poisoned(PoisonedModel(p), mm, s).points,
                m,
                derive_seed(seed, 401 + k, j),
            )
            bound = adversary.uniform_noise_kl_bound(c, cov, sign_moments)
            out.append(_at_most("uniform_kl_below_bound", f"{label} c={c}", est.value, bound,
                                3.0 * est.stderr))
        for t in (0.01, 0.05, 0.2, 0.9):
            for n in (1, 10, 100):
                c = adversary.uniform_budget_for_target(t, cov, n, sign_moments)
                tv = adversary.uniform_noise_tv_bound(c, cov, n, sign_moments)
                out.append(_close("uniform_budget_roundtrip", f"{label} t={t} n={n}", tv, t, 1e-9))
    return out


# ---------------------------------------------------------------- bounds

def _rotation_with_separation(k, v):
    """Orthogonal W2 with ||I - W2||_F^2 = v, rotating the first coordinate plane."""
    W = np.eye(k)
    theta = math.acos(1.0 - v / 4.0)
    W[:2, :2] = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    return W


def check_delta0_reduction(lams=(0.5, 1.0, 4.0), ns=(1, 10, 100, 1000), deltas=(0.0, 0.02, 0.1)):
    out = []
    for lam in lams:
        cov = SpdMatrix(np.diag([lam, lam + 1.0]))
        v_dir = np.asarray(cov.min_eigenvector)
        for n in ns:
            u = math.sqrt(lam / n)
            kl = divergences.kl_gaussian(Gaussian(np.zeros(2), cov), Gaussian(u * v_dir, cov))
            v = lam / n
            klc = bounds.classification_kl(np.zeros(2), math.sqrt(v) * v_dir, cov)
            for d in deltas:
                general = bounds.lecam_adversarial_general(u, 0.5 * math.exp(-n * kl), d)
                out.append(_close("mean_bound_is_general_bound", f"lam={lam} n={n} d={d}",
                                  bounds.mean_estimation_bound(lam, n, d), general, 1e-12))
                general = bounds.lecam_adversarial_general(v, 0.5 * math.exp(-n * klc), d)
                out.append(_close("classification_bound_is_general_bound", f"lam={lam} n={n} d={d}",
                                  bounds.classification_bound(lam, n, d), general, 1e-12))
    for eta, sigma, k in ((1.0, 1.0, 2), (0.5, 2.0, 3), (3.0, 1.0, 2)):
        for n in ns:
            try:
                bounds.check_procrustes_admissible(eta, sigma, n, k)
            except bounds.InadmissibleError:
                continue
            v = eta ** 2 / (n * sigma ** 2)
            W2 = _rotation_with_separation(k, v)
            sep = float(np.sum((np.eye(k) - W2) ** 2))
            kl = bounds.procrustes_kl_proof(np.eye(k), W2, sigma, eta)
            for d in deltas:
                general = bounds.lecam_adversarial_general(sep, 0.5 * math.exp(-n * kl), d)
                out.append(_close("procrustes_bound_is_general_bound",
                                  f"eta={eta} sigma={sigma} k={k} n={n} d={d}",
                                  bounds.procrustes_bound(eta, sigma, n, k, d), general, 1e-12))
    return out


def check_optimizer_dominance(grid=100_001):
    out = []
    for alpha in (0.5, 5.0, 50.0):
        for delta in (0.0, 0.01, 0.1, 0.5):
            u_max = 4.0 / math.sqrt(alpha)
            u, f = bounds.optimize_separation_quadratic(alpha, delta, u_max)
            plug = 1.0 / math.sqrt(2.0 * alpha)
            f_plug = plug / 8.0 * (math.exp(-alpha * plug ** 2) + 2.0 * delta)
            xs = np.linspace(0.0, u_max, grid)
            f_grid = float(np.max(xs / 8.0 * (np.exp(-alpha * xs ** 2) + 2.0 * delta)))
            case = f"quadratic alpha={alpha} delta={delta}"
            out.append(_at_least("optimizer_ge_plugin", case, f, f_plug))
            out.append(_at_least("optimizer_ge_grid", case, f, f_grid, 1e-12 * max(f_grid, 1.0)))
    for a in (1.0, 25.0, 100.0):
        for delta in (0.0, 0.01, 0.1, 0.5):
            v_max = 8.0
            v, g = bounds.optimize_separation_linear(a, delta, v_max)
            plug = min(1.0 / a, v_max)
            g_plug = plug / 8.0 * (math.exp(-a * plug) + 2.0 * delta)
            xs = np.linspace(0.0, v_max, grid)
            g_grid = float(np.max(xs / 8.0 * (np.exp(-a * xs) + 2.0 * delta)))
            case = f"linear a={a} delta={delta}"
            out.append(_at_least("optimizer_ge_plugin", case, g, g_plug))
            out.append(_at_least("optimizer_ge_grid", case, g, g_grid, 1e-12 * max(g_grid, 1.0)))
    return out


# ---------------------------------------------------------------- tasks

def default_tasks(k=2, seed=5):
    cov = SpdMatrix([[1.0, 0.5], [0.5, 1.0]]) if k == 2 else SpdMatrix.identity(k)
    return [
        tasks.MeanEstimation(np.ones(k), cov),
        tasks.BinaryClassification(np.ones(k) / math.sqrt(k), cov),
        tasks.Procrustes(random_orthogonal(k, derive_seed(seed, 501, 0)), 1.0, 1.0),
    ]


def check_bound_respected(replicates=1000, ns=(10, 100, 1000), seed=6):
    out = []
    for i, task in enumerate(default_tasks()):
        for n in ns:
            rep = tasks.empirical_risk(task, None, n, replicates, seed, scenario_id=10 * i + n)
            out.append(_at_least("risk_above_lower_bound", f"{task.name} n={n}",
                                 rep.empirical_risk + 3.0 * rep.stderr, rep.lower_bound_at_delta0))
    return out


def check_equivariance(seed=7):
    out = []
    mean_task, _, proc_task = default_tasks()
    batch = tasks.generate(mean_task, None, 200, derive_seed(seed, 701, 0))
    v = np.array([3.25, -1.5])
    moved = type(batch)(batch.points + v)
    err = float(np.max(np.abs(tasks.estimate_mean(moved) - (tasks.estimate_mean(batch) + v))))
    out.append(_at_most("mean_translation_equivariance", "shift (3.25, -1.5)", err, 0.0, 1e-12))
    batch = tasks.generate(proc_task, None, 200, derive_seed(seed, 702, 0))
    Q = random_orthogonal(2, derive_seed(seed, 703, 0))
    W = tasks.estimate_procrustes(batch)
    rotated = type(batch)(batch.points, targets=batch.targets @ Q.T)
    err = float(np.max(np.abs(tasks.estimate_procrustes(rotated) - Q @ W)))
    out.append(_at_most("procrustes_left_equivariance", "random Q", err, 0.0, 1e-10))
    return out


def check_procrustes_optimality(trials=10_000, seed=8):
    _, _, task = default_tasks()
    batch = tasks.generate(task, None, 50, derive_seed(seed, 801, 0))
    M = batch.targets.T @ batch.points
    best = float(np.trace(tasks.estimate_procrustes(batch).T @ M))
    stream = Stream(derive_seed(seed, 802, 0))
    rival = max(float(np.trace(random_orthogonal(2, stream).T @ M)) for _ in range(trials))
    return [_at_least("procrustes_trace_optimal", f"{trials} random W", best, rival, 1e-9 * abs(best))]


def check_classification_unbiased(replicates=10_000, n=50, seed=9):
    _, task, _ = default_tasks()
    ests = np.array([tasks.estimate_w(tasks.generate(task, None, n, derive_seed(seed, 901, r)))
                     for r in range(replicates)])
    mean = ests.mean(axis=0)
    se = ests.std(axis=0, ddof=1) / math.sqrt(replicates)
    return [_close("classification_estimator_unbiased", f"coord {j}", float(mean[j]),
                   float(task.w[j]), float(3.0 * se[j])) for j in range(task.dim)]


CHECKS = {
    "kl_oracle": check_kl_oracle,
    "affinity_sweep": check_affinity_sweep,
    "tv_ranges": check_tv_ranges,
    "sign_moments": check_sign_moments,
    "branch_consistency": check_branch_consistency,
    "b_psd": check_b_psd,
    "noise_kl_monotone": check_noise_kl_monotone,
    "gaussian_budget": check_gaussian_budget,
    "uniform_budget": check_uniform_budget,
    "delta0_reduction": check_delta0_reduction,
    "optimizer_dominance": check_optimizer_dominance,
    "bound_respected": check_bound_respected,
    "equivariance": check_equivariance,
    "procrustes_optimality": check_procrustes_optimality,
    "classification_unbiased": check_classification_unbiased,
}


def verify_suite(cfg=None, *, sign_moments=None, t_values=(0.01, 0.05, 0.1), only=None):
    """Run every check; ``sign_moments`` swaps in a B-matrix routine.

    Monte-Carlo sizes, replicate counts and seeds come from ``cfg`` (an
    :class:`ExperimentConfig`); ``None`` uses the defaults.
    """
    from .config import ExperimentConfig

    cfg = cfg or ExperimentConfig()
    m, seed, reps = cfg.mc_samples, cfg.seed, cfg.replicates
    plan = {
        "kl_oracle": lambda: check_kl_oracle(m, seed),
        "affinity_sweep": check_affinity_sweep,
        "tv_ranges": check_tv_ranges,
        "sign_moments": lambda: check_sign_moments(m, seed, sign_moments=sign_moments),
        "branch_consistency": lambda: check_branch_consistency(sign_moments=sign_moments),
        "b_psd": lambda: check_b_psd(seed=seed, sign_moments=sign_moments),
        "noise_kl_monotone": check_noise_kl_monotone,
        "gaussian_budget": lambda: check_gaussian_budget(ts=tuple(t_values)),
        "uniform_budget": lambda: check_uniform_budget(m, seed, sign_moments=sign_moments),
        "delta0_reduction": check_delta0_reduction,
        "optimizer_dominance": check_optimizer_dominance,
        "bound_respected": lambda: check_bound_respected(reps, seed=seed),
        "equivariance": lambda: check_equivariance(seed),
        "procrustes_optimality": lambda: check_procrustes_optimality(seed=seed),
        "classification_unbiased": lambda: check_classification_unbiased(seed=seed),
    }
    results = []
    for name, run in plan.items():
        if only and name not in only:
            continue
        results.extend(run())
    return results


def format_results(results):
    lines = [f"{'status':<6} {'check':<42} {'case':<34} {'observed':>14} {'expected':>14} {'margin':>11}"]
    for r in results:
        lines.append(
            f"{'PASS' if r.passed else 'FAIL':<6} {r.name:<42} {r.case:<34} "
            f"{r.observed:>14.7g} {r.expected:>14.7g} {r.margin:>11.3g}"
        )
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)
