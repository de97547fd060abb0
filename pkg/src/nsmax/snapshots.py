"""Self-describing on-disk formats: spectral field snapshots (flat binary plus
JSON header) and optimization-report serialization."""

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .optimizer import OptimizationReport

FIELD_FORMAT = "nsmax-spectral-field"
FIELD_VERSION = 1


def save_field(path_base, uhat: np.ndarray, n_per_dim: int, label: str = "velocity"):
    """Write a spectral field as <base>.json (header) + <base>.bin (little-endian
    complex128, C order, rfftn half-spectrum layout)."""
    base = Path(path_base)
    data = np.ascontiguousarray(uhat).astype("<c16")
    bin_path = base.with_suffix(".bin")
    header = {
        "format": FIELD_FORMAT,
        "version": FIELD_VERSION,
        "n_per_dim": int(n_per_dim),
        "components": int(uhat.shape[0]) if uhat.ndim == 4 else 1,
        "layout": "rfftn-half-spectrum",
        "shape": list(uhat.shape),
        "dtype": "complex128",
        "byte_order": "little",
        "label": label,
        "data_file": bin_path.name,
    }
    bin_path.write_bytes(data.tobytes(order="C"))
    base.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n")


def load_field(path_base):
    """Read a field written by :func:`save_field`; returns (array, header)."""
    base = Path(path_base)
    header = json.loads(base.with_suffix(".json").read_text())
    if header.get("format") != FIELD_FORMAT:
        raise ValueError(f"{base}: not a spectral field snapshot")
    raw = base.parent.joinpath(header["data_file"]).read_bytes()
    arr = np.frombuffer(raw, dtype="<c16").reshape(header["shape"]).astype(np.complex128)
    return arr, header


def report_to_dict(report: OptimizationReport) -> dict:
    """JSON-ready summary of an optimization run (field stored separately)."""
    return {
        "problem": report.problem.which,
        "constraint_kind": report.problem.constraint.kind,
        "constraint_value": report.problem.constraint.value,
        "horizon": report.problem.horizon,
        "nu": report.problem.solver.nu,
        "dt": report.problem.solver.dt,
        "grid_n": report.problem.grid.n,
        "ell": report.problem.sobolev.ell,
        "objective_exponent": report.problem.objective_exponent,
        "converged": report.converged,
        "reason": report.reason,
        "branch_tag": report.branch_tag,
        "objective": report.objective,
        "iterations": len(report.iterates) - 1 if report.iterates else 0,
        "iterates": [asdict(rec) for rec in report.iterates],
    }


def save_report(path, report: OptimizationReport):
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2) + "\n")


def load_report_dict(path) -> dict:
    return json.loads(Path(path).read_text())


def save_diagnostics_csv(path, records):
    lines = [records[0].CSV_HEADER] if records else ["t"]
    lines += [rec.csv_row() for rec in records]
    Path(path).write_text("\n".join(lines) + "\n")


def load_diagnostics_csv(path) -> dict:
    """Columns of a diagnostics time series as name -> float array."""
    text = Path(path).read_text().strip().splitlines()
    names = text[0].split(",")
    rows = [list(map(float, line.split(","))) for line in text[1:]]
    data = np.array(rows) if rows else np.zeros((0, len(names)))
    return {name: data[:, i] for i, name in enumerate(names)}
