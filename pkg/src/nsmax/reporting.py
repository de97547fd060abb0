"""Export of figure-ready data: tidy CSV bundles plus rendered PNG figures.

Every bundle is a long-format CSV with columns ``series,x,y`` (plus any extra
annotation columns); fitted curves ride along as additional ``fit:*`` series
so plots and data stay in one place.  Figures are rendered headlessly next to
their CSVs.
"""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import analysis as an

_FIGURES = {
    "objective_vs_horizon": {
        "xlabel": "optimization horizon T",
        "ylabel": "objective",
        "xscale": "log",
        "yscale": "log",
    },
    "objective_vs_constraint": {
        "xlabel": "constraint magnitude",
        "ylabel": "max objective over T",
        "xscale": "log",
        "yscale": "log",
    },
    "initial_rate_vs_l4": {
        "xlabel": "||u0||_L4^4",
        "ylabel": "d/dt ||u||_L4^4 at t=0",
        "xscale": "log",
        "yscale": "log",
    },
    "time_integral_vs_horizon": {
        "xlabel": "optimization horizon T",
        "ylabel": "T * objective",
        "xscale": "linear",
        "yscale": "linear",
    },
    "estimate_ratios": {
        "xlabel": "initial energy",
        "ylabel": "dissipation-normalized ratio",
        "xscale": "log",
        "yscale": "log",
    },
    "max_enstrophy_vs_initial": {
        "xlabel": "initial enstrophy",
        "ylabel": "max enstrophy over time",
        "xscale": "log",
        "yscale": "log",
    },
}


def _finite_rows(rows):
    return [r for r in rows if isinstance(r["objective"], float) and np.isfinite(r["objective"])]


def _series_points(rows, x_key, y_key, tag):
    pts = [(r[x_key], r[y_key]) for r in rows if np.isfinite(r[x_key]) and np.isfinite(r[y_key])]
    return [(tag, x, y) for x, y in sorted(pts)]


def _fit_series(points, tag, n_samples=50):
    """Power-law fit sampled over the data range; None when not fittable."""
    pts = np.array([(x, y) for _, x, y in points])
    if pts.shape[0] < 2 or np.any(pts <= 0.0):
        return None, None
    fit = an.fit_power_law(pts)
    xs = np.geomspace(pts[:, 0].min(), pts[:, 0].max(), n_samples)
    return fit, [(f"fit:{tag}", float(x), float(y)) for x, y in zip(xs, fit.predict(xs))]


def build_bundles(rows):
    """Assemble all figure bundles available from the summary rows.

    Returns (bundles, fits, absent): bundles maps name -> list of
    (series, x, y); absent maps figure name -> reason.
    """
    rows = _finite_rows(rows)
    bundles, fits, absent = {}, {}, {}

    def branch_groups():
        groups = {}
        for r in rows:
            groups.setdefault((r["constraint_value"], r["branch_tag"]), []).append(r)
        return groups

    # objective vs horizon, one series per (constraint, branch)
    series = []
    for (c_val, branch), grp in sorted(branch_groups().items()):
        tag = f"c={c_val:g}|{branch}"
        series += _series_points(grp, "horizon", "objective", tag)
    if series:
        bundles["objective_vs_horizon"] = series
    else:
        absent["objective_vs_horizon"] = "no completed runs"

    # max-over-T objective vs constraint magnitude, per branch, with fit
    by_branch = {}
    for r in rows:
        key = (r["branch_tag"], r["constraint_value"])
        if key not in by_branch or r["objective"] > by_branch[key]["objective"]:
            by_branch[key] = r
    series, fit_rows = [], []
    for branch in sorted({b for b, _ in by_branch}):
        pts = [
            (branch, c, by_branch[(branch, c)]["objective"])
            for b, c in sorted(by_branch)
            if b == branch
        ]
        series += pts
        fit, overlay = _fit_series(pts, branch)
        if fit is not None:
            fits[f"objective_vs_constraint:{branch}"] = fit
            fit_rows += overlay
    if series:
        bundles["objective_vs_constraint"] = series + fit_rows
    else:
        absent["objective_vs_constraint"] = "no completed runs"

    # instantaneous rate vs L4^4 at the shortest horizon
    if rows:
        t_min = min(r["horizon"] for r in rows)
        short = [r for r in rows if r["horizon"] == t_min and r["initial_l4_rate"] > 0.0]
        pts = _series_points(short, "initial_l4_pow4", "initial_l4_rate", "measured")
        if pts:
            fit, overlay = _fit_series(pts, "measured")
            if fit is not None:
                fits["initial_rate_vs_l4"] = fit
                pts += overlay
            bundles["initial_rate_vs_l4"] = pts
        else:
            absent["initial_rate_vs_l4"] = "no positive initial rates at the shortest horizon"

    # time integral vs horizon with saturation fit (one series per constraint)
    series = []
    for c_val in sorted({r["constraint_value"] for r in rows}):
        grp = [r for r in rows if r["constraint_value"] == c_val]
        pts = _series_points(grp, "horizon", "time_integral", f"c={c_val:g}")
        series += pts
        data = np.array([(x, y) for _, x, y in pts])
        if data.shape[0] >= 3:
            sat = an.fit_saturation(data)
            fits[f"time_integral_vs_horizon:c={c_val:g}"] = sat
            xs = np.linspace(data[:, 0].min(), data[:, 0].max(), 50)
            series += [(f"fit:c={c_val:g}", float(x), float(y)) for x, y in zip(xs, sat.predict(xs))]
    if series:
        bundles["time_integral_vs_horizon"] = series
    else:
        absent["time_integral_vs_horizon"] = "no completed runs"

    # dissipation-normalized estimate ratios vs initial energy
    series = []
    for r in rows:
        if np.isfinite(r["theta"]):
            series.append(("theta", r["initial_energy"], r["theta"]))
        if np.isfinite(r["xi"]):
            series.append((f"xi|T={r['horizon']:g}", r["initial_energy"], r["xi"]))
    if series:
        bundles["estimate_ratios"] = sorted(series)
    else:
        absent["estimate_ratios"] = "no ratio data"

    # maximum attained enstrophy vs initial enstrophy (best horizon per constraint)
    best = {}
    for r in rows:
        c = r["constraint_value"]
        if np.isfinite(r["max_enstrophy"]) and (
            c not in best or r["max_enstrophy"] > best[c]["max_enstrophy"]
        ):
            best[c] = r
    pts = _series_points(best.values(), "initial_enstrophy", "max_enstrophy", "measured")
    if pts:
        fit, overlay = _fit_series(pts, "measured")
        if fit is not None:
            fits["max_enstrophy_vs_initial"] = fit
            pts += overlay
        bundles["max_enstrophy_vs_initial"] = pts
    else:
        absent["max_enstrophy_vs_initial"] = "no enstrophy data"

    return bundles, fits, absent


def write_bundle_csv(path, series_rows, description):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {description}\n")
        writer = csv.writer(fh)
        writer.writerow(["series", "x", "y"])
        for tag, x, y in series_rows:
            writer.writerow([tag, f"{x:.12g}", f"{y:.12g}"])


def render_figure(path, name, series_rows):
    style = _FIGURES[name]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    groups = {}
    for tag, x, y in series_rows:
        groups.setdefault(tag, []).append((x, y))
    for tag, pts in sorted(groups.items()):
        pts = np.array(sorted(pts))
        if tag.startswith("fit:"):
            ax.plot(pts[:, 0], pts[:, 1], "-", lw=1.0, alpha=0.8, label=tag)
        else:
            ax.plot(pts[:, 0], pts[:, 1], "o--", ms=4, lw=0.8, label=tag)
    ax.set_xlabel(style["xlabel"])
    ax.set_ylabel(style["ylabel"])
    ax.set_xscale(style["xscale"])
    ax.set_yscale(style["yscale"])
    if len(groups) <= 12:
        ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def export_plot_data(rows, out_dir, render: bool = True):
    """Write every available figure bundle (CSV + PNG) and an index noting
    absent figures.  Returns the index dictionary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundles, fits, absent = build_bundles(rows)
    index = {"written": {}, "absent": absent}
    for name, series_rows in bundles.items():
        csv_path = out / f"{name}.csv"
        write_bundle_csv(
            csv_path,
            series_rows,
            f"{name}: columns series,x,y; x={_FIGURES[name]['xlabel']}, y={_FIGURES[name]['ylabel']}",
        )
        entry = {"csv": csv_path.name}
        if render:
            png_path = out / f"{name}.png"
            render_figure(png_path, name, series_rows)
            entry["png"] = png_path.name
        index["written"][name] = entry
    (out / "export_index.json").write_text(json.dumps(index, indent=2) + "\n")
    return index


def _fit_to_dict(fit):
    if isinstance(fit, an.PowerLawFit):
        return {
            "model": "power-law",
            "prefactor": fit.prefactor,
            "prefactor_stderr": fit.prefactor_stderr,
            "exponent": fit.exponent,
            "exponent_stderr": fit.exponent_stderr,
            "r_squared": fit.r_squared,
        }
    return {
        "model": "saturation",
        "psi_inf": fit.psi_inf,
        "psi_stderr": fit.psi_stderr,
        "alpha": fit.alpha,
        "alpha_stderr": fit.alpha_stderr,
        "beta": fit.beta,
        "beta_stderr": fit.beta_stderr,
        "residual_norm": fit.residual_norm,
        "converged": fit.converged,
    }


def analyze_summary(rows, out_dir):
    """Family-level fits and audits over a summary; writes analysis.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    finite = _finite_rows(rows)
    bundles, fits, absent = build_bundles(rows)

    result = {
        "n_runs": len(rows),
        "n_completed": len(finite),
        "fits": {name: _fit_to_dict(fit) for name, fit in fits.items()},
        "absent_figures": absent,
    }

    # unbounded-growth monitor per constraint value
    monitors = {}
    for c_val in sorted({r["constraint_value"] for r in finite}):
        grp = [r for r in finite if r["constraint_value"] == c_val]
        pairs = [(r["horizon"], r["objective"]) for r in grp]
        if len(pairs) >= 2:
            rep = an.lps_blowup_monitor(pairs)
            monitors[f"c={c_val:g}"] = {"flagged": rep.flagged, "detail": rep.detail}
    result["unbounded_growth_flags"] = monitors

    margins = [r["min_growth_margin"] for r in finite if np.isfinite(r["min_growth_margin"])]
    ratios = [r["gn_ratio_p4"] for r in finite if np.isfinite(r["gn_ratio_p4"])]
    result["audits"] = {
        "min_enstrophy_growth_margin": min(margins) if margins else None,
        "max_gn_ratio_p4": max(ratios) if ratios else None,
    }

    thetas = [(r["horizon"], r["theta"], r["xi"]) for r in finite if np.isfinite(r["theta"])]
    orderings = [t > x for _, t, x in thetas if np.isfinite(x)]
    result["theta_exceeds_xi"] = {
        "checked": len(orderings),
        "all_hold": bool(all(orderings)) if orderings else None,
    }

    (out / "analysis.json").write_text(json.dumps(result, indent=2) + "\n")
    return result
