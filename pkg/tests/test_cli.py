import json
import subprocess
import sys

import pytest

from advlecam.harness.cli import EXIT_BAD_CONFIG, EXIT_CHECK_FAILED, EXIT_OK, main


def _json_out(capsys, argv):
    assert main(argv) == EXIT_OK
    return json.loads(capsys.readouterr().out)


def test_bound(capsys):
    out = _json_out(capsys, ["bound", "--task", "mean", "--lambda-min", "1", "--n-value", "100", "--delta", "0"])
    assert out["bound"] == pytest.approx(0.0075816, abs=1e-7)


def test_bound_default_delta_from_beta(capsys):
    out = _json_out(capsys, ["bound", "--task", "classification", "--beta", "0.01"])
    assert out["delta"] == pytest.approx(0.02)


def test_bound_inadmissible_exit_code(capsys):
    rc = main(["bound", "--task", "procrustes", "--eta-scale", "100", "--n-value", "1"])
    assert rc == EXIT_BAD_CONFIG
    assert "4 k n" in capsys.readouterr().err


def test_budget_gaussian(capsys):
    out = _json_out(capsys, ["budget", "--noise", "gaussian", "--lambda-min", "4", "--n-value", "100",
                             "--t", "0.01"])
    assert out["c"] == pytest.approx(0.004) and out["tv_upper"] == pytest.approx(0.01)


def test_budget_uniform(capsys):
    out = _json_out(capsys, ["budget", "--noise", "uniform", "--cov", "[[1.0]]", "--n-value", "1", "--t", "0.2"])
    assert out["tv_upper"] == pytest.approx(0.2, abs=1e-9)


def test_budget_bad_cov(capsys):
    assert main(["budget", "--noise", "uniform", "--cov", "[[1, 2], [2, 1]]"]) == EXIT_BAD_CONFIG
    assert main(["budget", "--noise", "uniform"]) == EXIT_BAD_CONFIG


def test_divergence(capsys):
    out = _json_out(capsys, ["divergence", "--mu1", "[0]", "--mu2", "[1]", "--cov1", "[[1]]",
                             "--mc", "20000", "--seed", "2"])
    assert out["kl"] == 0.5 and out["tv_exact"] == pytest.approx(0.3829249, abs=5e-8)
    assert abs(out["kl_mc"]["value"] - 0.5) <= 4 * out["kl_mc"]["stderr"]


def test_simulate_requires_scenario(capsys):
    assert main(["simulate"]) == EXIT_BAD_CONFIG


def test_simulate_prints_csv(capsys):
    assert main(["simulate", "--scenario", "mean-uniform", "--n", "10", "--replicates", "30"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("scenario,k,n") and len(lines) == 2


def test_report_writes_files(tmp_path, capsys):
    rc = main(["report", "--out", str(tmp_path), "--n", "10,100", "--replicates", "30"])
    assert rc == EXIT_OK
    assert (tmp_path / "report.csv").read_text().count("\n") == 13
    doc = json.loads((tmp_path / "report.json").read_text())
    assert len(doc["rows"]) == 12


def test_report_jobs_bit_identical(tmp_path):
    blobs = []
    for jobs in ("1", "4"):
        out = tmp_path / jobs
        assert main(["report", "--out", str(out), "--n", "10,100", "--replicates", "30", "--jobs", jobs]) == EXIT_OK
        blobs.append(((out / "report.csv").read_bytes(), (out / "report.json").read_bytes()))
    assert blobs[0] == blobs[1]


def test_report_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenarios": ["mean-gaussian"], "n_grid": [10], "replicates": 30,
                               "out_dir": str(tmp_path / "o")}))
    assert main(["report", "--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "o" / "report.csv").exists()


@pytest.mark.parametrize("argv", [
    ["report", "--t", "2"],
    ["report", "--replicates", "3"],
    ["report", "--n", "a,b"],
    ["report", "--config", "/nonexistent/cfg.json"],
    ["nonsense"],
])
def test_invalid_inputs_exit_2(argv, capsys):
    assert main(argv) == EXIT_BAD_CONFIG


def test_verify_exit_codes(monkeypatch, capsys):
    from advlecam.harness import cli
    from advlecam.harness.verify import CheckResult

    monkeypatch.setattr(cli, "verify_suite", lambda cfg, t_values: [CheckResult("x", "y", 1, 0, 0, -1)])
    assert main(["verify"]) == EXIT_CHECK_FAILED
    monkeypatch.setattr(cli, "verify_suite", lambda cfg, t_values: [CheckResult("x", "y", 0, 0, 0, 0)])
    assert main(["verify"]) == EXIT_OK
    assert "1/1 checks passed" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "advlecam", "bound", "--task", "procrustes"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["bound"] > 0
