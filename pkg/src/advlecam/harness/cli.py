"""Command-line entry point: ``advlecam <subcommand> [flags]``.

Exit codes: 0 success, 1 a verification check failed, 2 invalid
configuration or arguments.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .. import adversary, bounds, divergences
from ..distributions import (
    Gaussian, NotPositiveDefiniteError, PoisonedModel, SpdMatrix, gaussian_log_density, sample_poisoned,
)
from .config import SCENARIOS, ConfigError, ExperimentConfig, load_config
from .report import render_csv, run_scenarios, write_report
from .verify import format_results, verify_suite

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BAD_CONFIG = 0, 1, 2


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _parse_matrix(text, name):
    try:
        return SpdMatrix(json.loads(text))
    except (json.JSONDecodeError, NotPositiveDefiniteError, ValueError) as exc:
        raise ConfigError(f"--{name}: {exc}") from None


def _parse_vector(text, name):
    try:
        return np.atleast_1d(np.array(json.loads(text), dtype=float))
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise ConfigError(f"--{name}: {exc}") from None


def _parse_n_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    if args.t is not None:
        cfg.t = args.t
    if args.n is not None:
        cfg.n_grid = args.n
    if args.replicates is not None:
        cfg.replicates = args.replicates
    if getattr(args, "scenario", None):
        cfg.scenarios = [args.scenario]
    return cfg.validate()


def cmd_bound(args):
    delta = args.delta
    if delta is None:
        delta = bounds.delta_interval(args.beta)[1]
    if args.task == "mean":
        value = bounds.mean_estimation_bound(args.lambda_min, args.n_value, delta)
    elif args.task == "classification":
        value = bounds.classification_bound(args.lambda_min, args.n_value, delta)
    else:
        value = bounds.procrustes_bound(args.eta_scale, args.x_scale, args.n_value, args.k, delta)
    _emit({"task": args.task, "n": args.n_value, "delta": delta, "bound": value})
    return EXIT_OK


def cmd_budget(args):
    t = 0.05 if args.t is None else args.t
    if not 0.0 <= t <= 1.0:
        raise ConfigError("--t must lie in [0, 1]")
    if args.noise == "gaussian":
        lam = args.lambda_min if args.lambda_min is not None else _parse_matrix(args.cov, "cov").min_eigenvalue
        c = adversary.gaussian_budget_for_target(t, lam, args.n_value)
        tv = adversary.gaussian_noise_tv_bound(c, lam, args.n_value)
    else:
        if args.cov is None:
            raise ConfigError("uniform budget needs --cov")
        cov = _parse_matrix(args.cov, "cov")
        c = adversary.uniform_budget_for_target(t, cov, args.n_value)
        tv = adversary.uniform_noise_tv_bound(c, cov, args.n_value)
    _emit({"noise": args.noise, "t": t, "n": args.n_value, "c": c, "tv_upper": tv,
           "delta_hi": 2.0 * t})
    return EXIT_OK


def cmd_divergence(args):
    p = Gaussian(_parse_vector(args.mu1, "mu1"), _parse_matrix(args.cov1, "cov1"))
    q = Gaussian(_parse_vector(args.mu2, "mu2"), _parse_matrix(args.cov2 or args.cov1, "cov2"))
    kl = divergences.kl_gaussian(p, q)
    out = {
        "kl": kl,
        "affinity_lower_bound": divergences.affinity_lower_bound(kl),
        "pinsker_tv_upper": divergences.pinsker_product_tv_upper(kl, args.n_value),
        "n": args.n_value,
    }
    if p.cov == q.cov:
        out["tv_exact"] = divergences.tv_equal_cov_gaussian_exact(p.mean, q.mean, p.cov, args.n_value)
    if args.mc:
        est = divergences.kl_monte_carlo(
            lambda x: gaussian_log_density(p, x),
            lambda x: gaussian_log_density(q, x),
            lambda m, s: sample_poisoned(PoisonedModel(p), m, s).points,
            args.mc,
            args.seed if args.seed is not None else 0,
        )
        out["kl_mc"] = {"value": est.value, "stderr": est.stderr, "samples": est.samples_used}
    _emit(out)
    return EXIT_OK


def cmd_simulate(args):
    if not args.scenario:
        raise ConfigError(f"simulate needs --scenario (one of {', '.join(SCENARIOS)})")
    cfg = _config_from_args(args)
    rows = run_scenarios(cfg, jobs=args.jobs)
    sys.stdout.write(render_csv(rows))
    if args.out:
        write_report(cfg, rows, stem=f"simulate-{args.scenario}")
    return EXIT_OK


def cmd_report(args):
    cfg = _config_from_args(args)
    rows = run_scenarios(cfg, jobs=args.jobs)
    csv_path, json_path = write_report(cfg, rows)
    skipped = [r for r in rows if r.status != "ok"]
    print(f"wrote {len(rows)} rows ({len(skipped)} skipped) to {csv_path} and {json_path}")
    for r in skipped:
        print(f"  skipped {r.scenario} n={r.n}: {r.reason}")
    return EXIT_OK


def cmd_verify(args):
    cfg = _config_from_args(args)
    if args.mc_samples is not None:
        cfg.mc_samples = args.mc_samples
        cfg.validate()
    results = verify_suite(cfg, t_values=args.t_sweep)
    print(format_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--seed", type=int, help="unsigned 64-bit base seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--t", type=float, help="target product-TV level in [0, 1]")
    common.add_argument("--n", type=_parse_n_list, help="comma-separated sample sizes")
    common.add_argument("--replicates", type=int)
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    parser = argparse.ArgumentParser(prog="advlecam", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="evaluate a task lower bound")
    p.add_argument("--task", choices=["mean", "classification", "procrustes"], required=True)
    p.add_argument("--lambda-min", type=float, default=1.0)
    p.add_argument("--n-value", type=int, default=100, help="sample size for the bound")
    p.add_argument("--delta", type=float, help="adversarial slack (default 2*beta)")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--eta-scale", type=float, default=1.0)
    p.add_argument("--x-scale", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("budget", parents=[common], help="noise magnitude for a TV target")
    p.add_argument("--noise", choices=["gaussian", "uniform"], required=True)
    p.add_argument("--n-value", type=int, default=100)
    p.add_argument("--lambda-min", type=float)
    p.add_argument("--cov", help="covariance as a JSON nested list")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("divergence", parents=[common], help="KL / TV between two Gaussians")
    p.add_argument("--mu1", required=True)
    p.add_argument("--mu2", required=True)
    p.add_argument("--cov1", required=True)
    p.add_argument("--cov2")
    p.add_argument("--n-value", type=int, default=1)
    p.add_argument("--mc", type=int, help="also estimate KL by Monte Carlo with this many draws")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("simulate", parents=[common], help="run one scenario")
    p.add_argument("--scenario", choices=list(SCENARIOS))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="run the full scenario matrix")
    p.add_argument("--scenario", choices=list(SCENARIOS), help="restrict to one scenario")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", parents=[common], help="run the oracle suite")
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--t-sweep", type=lambda s: [float(x) for x in s.split(",")],
                   default=[0.01, 0.05, 0.1])
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ValueError as exc:  # ConfigError, InadmissibleError, bad numeric input
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
