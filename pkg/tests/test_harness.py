import csv
import io
import json
import math

import numpy as np
import pytest

from advlecam import rng
from advlecam.adversary import SignMoments, sign_moment_matrices
from advlecam.harness.config import (
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    build_scenario,
    calibrate_noise,
    load_config,
)
from advlecam.harness.report import (
    CSV_COLUMNS,
    recompute_bounds,
    render_csv,
    render_json,
    run_scenarios,
    write_report,
)
from advlecam.harness.verify import format_results, verify_suite


def _small(**kw):
    base = dict(n_grid=[10, 100], replicates=40)
    base.update(kw)
    return ExperimentConfig(**base).validate()


# ------------------------------------------------------------ config

def test_defaults_valid():
    cfg = ExperimentConfig().validate()
    assert cfg.scenarios == list(SCENARIOS) and cfg.delta_hi == pytest.approx(0.1)


@pytest.mark.parametrize("kw", [
    dict(scenarios=["mean-laplace"]), dict(scenarios=[]), dict(k=0), dict(n_grid=[0]),
    dict(replicates=5), dict(t=1.5), dict(beta=-0.1), dict(seed=-1), dict(mc_samples=10),
    dict(cov_rho=1.0), dict(eta_scale=0.0),
])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).validate()


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_dict({"replicate": 100})


def test_load_config_roundtrip(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(_small(t=0.1).to_dict()))
    assert load_config(p) == _small(t=0.1)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_beta_caps_delta():
    assert _small(t=0.3, beta=0.01).delta_hi == pytest.approx(0.02)


def test_t_zero_means_no_noise():
    cfg = _small(t=0.0)
    for name in SCENARIOS:
        task, kind = build_scenario(cfg, name)
        noise, c, tv = calibrate_noise(task, kind, 0.0, 100)
        assert noise is None and c == 0.0 and tv == 0.0


def test_calibration_hits_target():
    cfg = _small()
    for name in SCENARIOS:
        task, kind = build_scenario(cfg, name)
        _, c, tv = calibrate_noise(task, kind, 0.05, 100)
        assert c > 0 and tv == pytest.approx(0.05, abs=1e-9)


# ------------------------------------------------------------ report

def test_row_count_and_columns():
    cfg = _small()
    rows = run_scenarios(cfg)
    assert len(rows) == len(SCENARIOS) * 2
    header = render_csv(rows).splitlines()[0].split(",")
    assert tuple(header) == CSV_COLUMNS


def test_report_rows_dominate_bound():
    rows = run_scenarios(_small(replicates=100))
    for r in rows:
        assert r.status == "ok"
        assert r.risk_mean + 3 * r.risk_stderr >= r.bound_delta0
        assert r.bound_deltahi >= r.bound_delta0
        assert math.isnan(r.seconds)


def test_t_zero_reduces_to_classical():
    rows = run_scenarios(_small(t=0.0, n_grid=[100]))
    for r in rows:
        assert r.c == 0.0 and r.delta_hi == 0.0 and r.bound_deltahi == r.bound_delta0


def test_inadmissible_procrustes_row_skipped():
    cfg = _small(scenarios=["procrustes-gaussian", "mean-gaussian"], eta_scale=10.0, n_grid=[1, 100])
    rows = run_scenarios(cfg)
    status = {(r.scenario, r.n): r.status for r in rows}
    assert status[("procrustes-gaussian", 1)] == "skipped"
    assert status[("procrustes-gaussian", 100)] == "ok"
    assert status[("mean-gaussian", 1)] == "ok"
    skipped = next(r for r in rows if r.status == "skipped")
    assert "4 k n" in skipped.reason and math.isnan(skipped.risk_mean)


def test_timing_column_opt_in():
    rows = run_scenarios(_small(record_timing=True, scenarios=["mean-gaussian"], n_grid=[10]))
    assert rows[0].seconds > 0


def test_json_bounds_recompute_bit_for_bit():
    cfg = _small(beta=0.02)
    doc = json.loads(render_json(cfg, run_scenarios(cfg)))
    assert doc["format"] == "advlecam-report/1"
    for row in doc["rows"]:
        b0, bhi = recompute_bounds(row)
        assert b0 == row["bound_delta0"] and bhi == row["bound_deltahi"]


def test_csv_floats_roundtrip_exactly():
    rows = run_scenarios(_small(scenarios=["mean-uniform"]))
    parsed = list(csv.DictReader(io.StringIO(render_csv(rows))))
    for r, p in zip(rows, parsed):
        assert float(p["risk_mean"]) == r.risk_mean and float(p["c"]) == r.c


def test_report_deterministic_across_runs_and_jobs(tmp_path):
    cfg = _small()
    outs = []
    for i, jobs in enumerate((1, 1, 4)):
        rows = run_scenarios(cfg, jobs=jobs)
        c, j = write_report(cfg, rows, out_dir=tmp_path / str(i))
        outs.append((open(c, "rb").read(), open(j, "rb").read()))
    assert outs[0] == outs[1] == outs[2]


def test_report_identical_across_backends():
    cfg = _small(scenarios=["classification-uniform"])
    out = {}
    for name in rng.available_backends():
        with rng.use_backend(name):
            out[name] = render_csv(run_scenarios(cfg))
    assert len(set(out.values())) == 1


def test_scenario_order_does_not_change_rows():
    a = run_scenarios(_small(scenarios=["mean-gaussian", "procrustes-uniform"]))
    b = run_scenarios(_small(scenarios=["procrustes-uniform", "mean-gaussian"]))
    key = lambda rs: {(r.scenario, r.n): r.csv_values() for r in rs}  # noqa: E731
    assert key(a) == key(b)


# ------------------------------------------------------------ verify

def test_verify_default_all_pass():
    results = verify_suite(ExperimentConfig(mc_samples=50_000, replicates=200))
    assert all(r.passed for r in results), format_results([r for r in results if not r.passed])


def test_verify_t_sweep_margins_nonnegative():
    results = verify_suite(t_values=(0.01, 0.05, 0.1), only={"gaussian_budget"})
    assert results and all(r.margin >= 0 for r in results)


def test_negative_control_corrupted_b_fails():
    def corrupted(cov):
        m = sign_moment_matrices(cov)
        B = m.B.copy()
        off = ~np.eye(len(B), dtype=bool)
        B[off] = -2.0 * B[off]  # wrong sign and scale on the arcsine term
        return SignMoments(m.A, B, m.V)

    results = verify_suite(ExperimentConfig(mc_samples=50_000), sign_moments=corrupted,
                           only={"sign_moments", "b_psd", "branch_consistency"})
    failed = {r.name for r in results if not r.passed}
    assert "b_matrix_psd" in failed or "cov_sign_sign_vs_mc" in failed
    assert "b_branches_equal_arcsin" in failed


def test_format_results_summary_line():
    text = format_results(verify_suite(only={"tv_ranges"}))
    assert text.splitlines()[-1].endswith("checks passed")
