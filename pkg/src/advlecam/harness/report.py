"""Scenario matrix runner and CSV/JSON report writer."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .. import __version__
from ..bounds import InadmissibleError, classification_bound, mean_estimation_bound, procrustes_bound
from ..tasks import Procrustes, empirical_risk, lower_bound, noise_covariance
from .config import SCENARIOS, ExperimentConfig, build_scenario, calibrate_noise

__all__ = [
    "CSV_COLUMNS",
    "ReportRow",
    "recompute_bounds",
    "render_csv",
    "render_json",
    "run_scenarios",
    "write_report",
]

CSV_COLUMNS = (
    "scenario", "k", "n", "t", "c", "tv_upper", "delta_hi",
    "risk_mean", "risk_stderr", "bound_delta0", "bound_deltahi", "seconds",
)


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    k: int
    n: int
    t: float
    c: float
    tv_upper: float
    delta_hi: float
    risk_mean: float
    risk_stderr: float
    bound_delta0: float
    bound_deltahi: float
    seconds: float
    status: str = "ok"
    reason: str = ""
    provenance: dict = None

    def csv_values(self):
        out = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            out.append(format(v, ".17g") if isinstance(v, float) else str(v))
        return out


def row_id(scenario, n):
    return (SCENARIOS[scenario] << 32) | int(n)


def _bound_inputs(task, n):
    if isinstance(task, Procrustes):
        return {"task": "procrustes", "n": n, "k": task.dim,
                "eta_scale": task.eta_scale, "x_scale": task.x_scale}
    return {"task": task.name, "n": n, "lambda_min": task.cov.min_eigenvalue}


def _compute_row(cfg_dict, scenario, n):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    start = time.perf_counter()
    task, noise_kind = build_scenario(cfg, scenario)
    rid = row_id(scenario, n)
    noise, c, tv = calibrate_noise(task, noise_kind, cfg.t, n)
    delta_hi = cfg.delta_hi
    provenance = {
        "row_id": rid,
        "seed": cfg.seed,
        "noise": _describe_noise(noise),
        "noise_cov_min_eigenvalue": noise_covariance(task).min_eigenvalue,
        "bound_inputs": _bound_inputs(task, n),
    }
    nan = float("nan")
    try:
        b0 = lower_bound(task, n, 0.0)
        bhi = lower_bound(task, n, delta_hi)
    except InadmissibleError as exc:
        return ReportRow(scenario, cfg.k, n, cfg.t, c, tv, delta_hi, nan, nan, nan, nan,
                         nan, status="skipped", reason=str(exc), provenance=provenance)
    rep = empirical_risk(task, noise, n, cfg.replicates, cfg.seed, scenario_id=rid)
    seconds = time.perf_counter() - start if cfg.record_timing else nan
    return ReportRow(scenario, cfg.k, n, cfg.t, c, tv, delta_hi, rep.empirical_risk,
                     rep.stderr, b0, bhi, seconds, provenance=provenance)


def _describe_noise(noise):
    if noise is None:
        return {"kind": "none"}
    if hasattr(noise, "shift"):
        return {"kind": "gaussian", "shift": noise.shift.tolist(), "scale": noise.scale}
    return {"kind": "uniform", "half_width": noise.half_width, "dim": noise.dim}


def run_scenarios(cfg, jobs=1):
    """One row per (scenario, n), in config order.

    Rows are independent given their seeds, so the worker count never
    changes the output.
    """
    cfg.validate()
    cells = [(s, n) for s in cfg.scenarios for n in cfg.n_grid]
    cfg_dict = cfg.to_dict()
    if jobs <= 1:
        return [_compute_row(cfg_dict, s, n) for s, n in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_compute_row, cfg_dict, s, n) for s, n in cells]
        return [f.result() for f in futures]


def render_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_values())
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def render_json(cfg, rows):
    doc = {
        "format": "advlecam-report/1",
        "version": __version__,
        "columns": list(CSV_COLUMNS),
        # out_dir is where the file lives, not an input to its contents
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out_dir"},
        "rows": [
            {**{col: getattr(r, col) for col in CSV_COLUMNS},
             "status": r.status, "reason": r.reason, "provenance": r.provenance}
            for r in rows
        ],
    }
    return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"


def write_report(cfg, rows, out_dir=None, stem="report"):
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    with open(csv_path, "w", newline="") as fh:
        fh.write(render_csv(rows))
    with open(json_path, "w") as fh:
        fh.write(render_json(cfg, rows))
    return csv_path, json_path


def recompute_bounds(json_row):
    """(bound_delta0, bound_deltahi) rebuilt from a persisted JSON row."""
    b = json_row["provenance"]["bound_inputs"]
    d = json_row["delta_hi"]
    if b["task"] == "mean":
        fn = lambda x: mean_estimation_bound(b["lambda_min"], b["n"], x)  # noqa: E731
    elif b["task"] == "classification":
        fn = lambda x: classification_bound(b["lambda_min"], b["n"], x)  # noqa: E731
    else:
        fn = lambda x: procrustes_bound(b["eta_scale"], b["x_scale"], b["n"], b["k"], x)  # noqa: E731
    return fn(0.0), fn(d)
