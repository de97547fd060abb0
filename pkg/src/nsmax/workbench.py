"""Sweep orchestration: executes manifest-defined optimization families and
lays out a self-describing artifact tree.

Every run directory holds four artifacts: the optimal initial condition
snapshot, the diagnostics time series of the optimal flow, the optimization
report, and the per-run analysis record.  Completed runs are identified by a
content hash of their parameters, so re-running a manifest skips them unless
``force`` is set.
"""

import csv
import json
import shutil
from pathlib import Path

import numpy as np

from . import analysis as an
from .functionals import instantaneous_l4_rate
from .manifest import RunManifest
from .optimizer import (
    OptimizationReport,
    continuation,
    initial_guess,
    make_problem,
)
from .snapshots import report_to_dict, save_diagnostics_csv, save_field, save_report
from .solver import SolverConfig, solve_forward
from .spectral import SpectralGrid

SUMMARY_COLUMNS = [
    "run_id",
    "problem",
    "constraint_kind",
    "constraint_value",
    "sphere_value",
    "horizon",
    "objective",
    "time_integral",
    "branch_tag",
    "converged",
    "reason",
    "iterations",
    "initial_l4_pow4",
    "initial_energy",
    "initial_enstrophy",
    "max_enstrophy",
    "initial_l4_rate",
    "theta",
    "xi",
    "gn_ratio_p4",
    "min_growth_margin",
]


def run_id_for(manifest: RunManifest, c_value: float, horizon: float) -> str:
    return f"{manifest.problem}_c{c_value:g}_T{horizon:g}"


def _analyze_run(grid, manifest, report, traj):
    """Per-run scalar analysis written next to the raw artifacts."""
    u0 = report.final_u0
    diag0 = traj.diagnostics[0]
    audit = an.audit_enstrophy_bounds(traj, manifest.nu)
    record = {
        "initial": {
            "K": diag0.K,
            "E": diag0.E,
            "l4_norm": diag0.l4_norm,
            "l2_norm": diag0.l2_norm,
            "h34_seminorm": diag0.h34_seminorm,
        },
        "final_K": traj.diagnostics[-1].K,
        "max_enstrophy": audit.max_enstrophy,
        "min_growth_margin": audit.min_margin,
        "within_envelope": audit.within_envelope,
        "initial_l4_rate": instantaneous_l4_rate(grid, u0, manifest.nu),
        "theta": an.theta_limit(grid, u0, manifest.nu) if diag0.E > 0 else None,
        "gn_ratio_p4": an.audit_gn_inequality(grid, u0, 4.0),
    }
    try:
        record["xi"] = an.xi_ratio(traj, diag0.K)
    except ValueError:
        record["xi"] = None
    return record


def _summary_row(manifest, c_value, horizon, report_dict, analysis_dict):
    objective = report_dict["objective"]
    return {
        "run_id": run_id_for(manifest, c_value, horizon),
        "problem": manifest.problem,
        "constraint_kind": report_dict["constraint_kind"],
        "constraint_value": c_value,
        "sphere_value": report_dict["constraint_value"],
        "horizon": horizon,
        "objective": objective,
        "time_integral": horizon * objective if np.isfinite(objective) else objective,
        "branch_tag": report_dict["branch_tag"],
        "converged": report_dict["converged"],
        "reason": report_dict["reason"],
        "iterations": report_dict["iterations"],
        "initial_l4_pow4": analysis_dict["initial"]["l4_norm"] ** 4,
        "initial_energy": analysis_dict["initial"]["K"],
        "initial_enstrophy": analysis_dict["initial"]["E"],
        "max_enstrophy": analysis_dict["max_enstrophy"],
        "initial_l4_rate": analysis_dict["initial_l4_rate"],
        "theta": analysis_dict["theta"],
        "xi": analysis_dict["xi"],
        "gn_ratio_p4": analysis_dict["gn_ratio_p4"],
        "min_growth_margin": analysis_dict["min_growth_margin"],
    }


def _write_run_artifacts(run_dir: Path, manifest, grid, report, run_hash, c_value, horizon):
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "run_spec.json").write_text(
        json.dumps({"hash": run_hash, "spec": manifest.run_spec(c_value, horizon)}, indent=2) + "\n"
    )
    save_field(run_dir / "optimal_field", report.final_u0, grid.n, label="optimal-initial-velocity")
    save_report(run_dir / "report.json", report)

    cadence_cfg = SolverConfig(
        grid=grid,
        nu=manifest.nu,
        dt=manifest.dt,
        t_final=report.problem.horizon,
        save_stride=manifest.save_stride,
    )
    traj = solve_forward(grid, report.final_u0, cadence_cfg)
    save_diagnostics_csv(run_dir / "diagnostics.csv", traj.diagnostics)

    analysis_dict = _analyze_run(grid, manifest, report, traj)
    (run_dir / "analysis.json").write_text(json.dumps(analysis_dict, indent=2) + "\n")
    (run_dir / "complete.json").write_text(json.dumps({"hash": run_hash}) + "\n")
    return analysis_dict


def _load_completed(run_dir: Path):
    report_dict = json.loads((run_dir / "report.json").read_text())
    analysis_dict = json.loads((run_dir / "analysis.json").read_text())
    return report_dict, analysis_dict


def run_workbench(manifest: RunManifest, output_root=".", force: bool = False, guess=None):
    """Execute a manifest; returns (summary_rows, base_directory).

    ``guess`` optionally seeds the first run of the first constraint value;
    later members are seeded by continuation.  Raises OSError subclasses for
    I/O problems; optimization failures are recorded in the summary and do
    not stop the sweep.
    """
    base = Path(output_root) / manifest.output_dir
    runs_root = base / "runs"
    base.mkdir(parents=True, exist_ok=True)
    runs_root.mkdir(parents=True, exist_ok=True)
    (base / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")

    grid = SpectralGrid(manifest.grid_n)
    rows = []
    first_horizon_optima = {}

    for ci, c_value in enumerate(manifest.constraint_values):
        sphere_value = manifest.sphere_value(c_value)
        problems = [
            make_problem(
                manifest.problem,
                sphere_value,
                horizon,
                grid,
                nu=manifest.nu,
                dt=manifest.dt,
                ell=manifest.ell,
            )
            for horizon in manifest.horizons
        ]
        pending = []
        for prob, horizon in zip(problems, manifest.horizons):
            run_hash = manifest.run_hash(c_value, horizon)
            run_dir = runs_root / run_id_for(manifest, c_value, horizon)
            marker = run_dir / "complete.json"
            if run_dir.exists():
                done = marker.exists() and json.loads(marker.read_text()).get("hash") == run_hash
                if done and not force:
                    report_dict, analysis_dict = _load_completed(run_dir)
                    rows.append(_summary_row(manifest, c_value, horizon, report_dict, analysis_dict))
                    continue
                if not force:
                    raise FileExistsError(
                        f"run directory {run_dir} exists and does not match the manifest; "
                        "pass --force to overwrite"
                    )
                shutil.rmtree(run_dir)
            pending.append((prob, horizon, run_hash, run_dir))

        if not pending:
            continue
        rng = np.random.default_rng([manifest.seed, ci])
        if ci == 0 and guess is not None:
            seed_field = guess
        elif ci - 1 in first_horizon_optima:
            seed_field = first_horizon_optima[ci - 1]
        else:
            seed_field = initial_guess(grid, problems[0].constraint, rng, k_max=manifest.guess_k_max)
        reports = continuation(
            [prob for prob, *_ in pending],
            seed_field,
            max_iterations=manifest.max_iterations,
            objective_stall_tol=manifest.objective_stall_tol,
        )
        for (prob, horizon, run_hash, run_dir), report in zip(pending, reports):
            if report.final_u0 is None:
                rows.append(_failed_row(manifest, c_value, horizon, report))
                continue
            if horizon == manifest.horizons[0]:
                first_horizon_optima[ci] = report.final_u0
            analysis_dict = _write_run_artifacts(
                run_dir, manifest, grid, report, run_hash, c_value, horizon
            )
            rows.append(_summary_row(manifest, c_value, horizon, report_to_dict(report), analysis_dict))

    write_summary_csv(base / "summary.csv", rows)
    return rows, base


def _failed_row(manifest, c_value, horizon, report: OptimizationReport):
    row = {col: "" for col in SUMMARY_COLUMNS}
    row.update(
        {
            "run_id": run_id_for(manifest, c_value, horizon),
            "problem": manifest.problem,
            "constraint_kind": report.problem.constraint.kind,
            "constraint_value": c_value,
            "sphere_value": report.problem.constraint.value,
            "horizon": horizon,
            "objective": float("nan"),
            "branch_tag": report.branch_tag,
            "converged": False,
            "reason": report.reason,
            "iterations": len(report.iterates),
        }
    )
    return row


def write_summary_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def load_summary_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            row = dict(raw)
            for key in SUMMARY_COLUMNS:
                if key in ("run_id", "problem", "constraint_kind", "branch_tag", "reason"):
                    continue
                val = row.get(key, "")
                if key == "converged":
                    row[key] = val in ("True", "true", "1")
                else:
                    row[key] = float(val) if val not in ("", "None") else float("nan")
            rows.append(row)
    return rows
