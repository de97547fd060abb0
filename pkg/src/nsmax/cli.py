"""Command-line surface: optimize, sweep, analyze, verify, export.

Exit codes: 0 success, 2 validation error, 3 numerical abort or failed
verification, 4 I/O error.  The output root directory defaults to the
NSMAX_OUTPUT_ROOT environment variable; FFT threading is controlled by
NSMAX_THREADS.
"""

import argparse
import json
import os
import sys
from pathlib import Path

from .manifest import RunManifest, ValidationError
from .solver import NumericalInstabilityError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _output_root(args) -> str:
    if getattr(args, "output_root", None):
        return args.output_root
    return os.environ.get("NSMAX_OUTPUT_ROOT", ".")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsmax",
        description=(
            "Optimization workbench for periodic-box Navier-Stokes flows: finds "
            "initial conditions maximizing time-averaged L4-norm growth on "
            "constraint spheres and audits the associated a priori bounds."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-root", help="root directory for artifacts (default: $NSMAX_OUTPUT_ROOT or .)")

    p_opt = sub.add_parser("optimize", parents=[common], help="run a single optimization problem")
    p_opt.add_argument("--problem", required=True, choices=("problem1", "problem2", "problem3"))
    p_opt.add_argument(
        "--constraint-value",
        type=float,
        required=True,
        help="sweep-level magnitude: ||u0||_L4^4 (problem1), seminorm^2 (problem2), energy (problem3)",
    )
    p_opt.add_argument("--horizon", type=float, required=True, help="optimization horizon T")
    p_opt.add_argument("--grid-n", type=int, default=32)
    p_opt.add_argument("--dt", type=float, default=1e-4)
    p_opt.add_argument("--nu", type=float, default=0.01)
    p_opt.add_argument("--ell", type=float, default=2.0)
    p_opt.add_argument("--seed", type=int, default=0)
    p_opt.add_argument("--max-iterations", type=int, default=500)
    p_opt.add_argument("--save-stride", type=int, default=1, help="diagnostics cadence in steps")
    p_opt.add_argument("--output-dir", default="single", help="directory under the output root")
    p_opt.add_argument("--guess", help="path base of a field snapshot used as the initial guess")
    p_opt.add_argument("--force", action="store_true", help="overwrite an existing run directory")

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a manifest-defined sweep")
    p_sweep.add_argument("--manifest", required=True, help="path to a JSON run manifest")
    p_sweep.add_argument("--force", action="store_true", help="overwrite mismatched run directories")
    p_sweep.add_argument("--seed", type=int, help="override the manifest seed")
    p_sweep.add_argument("--output-dir", help="override the manifest output_dir")

    p_an = sub.add_parser("analyze", parents=[common], help="fits and audits over a sweep summary")
    p_an.add_argument("--summary", required=True, help="path to summary.csv from a sweep")
    p_an.add_argument("--output-dir", default="analysis")

    p_ver = sub.add_parser("verify", parents=[common], help="run the built-in verification suite")
    p_ver.add_argument("--level", choices=("quick", "full"), default="quick")

    p_exp = sub.add_parser("export", parents=[common], help="export figure CSV bundles and PNGs")
    p_exp.add_argument("--summary", required=True, help="path to summary.csv from a sweep")
    p_exp.add_argument("--output-dir", default="figures")
    p_exp.add_argument("--no-render", action="store_true", help="write CSVs only, skip figures")

    return parser


def cmd_optimize(args) -> int:
    from .snapshots import load_field
    from .workbench import run_workbench

    manifest = RunManifest(
        problem=args.problem,
        constraint_values=[args.constraint_value],
        horizons=[args.horizon],
        grid_n=args.grid_n,
        nu=args.nu,
        dt=args.dt,
        ell=args.ell,
        seed=args.seed,
        output_dir=args.output_dir,
        save_stride=args.save_stride,
        max_iterations=args.max_iterations,
    )
    guess = None
    if args.guess:
        guess, _ = load_field(args.guess)
    rows, base = run_workbench(manifest, output_root=_output_root(args), force=args.force, guess=guess)
    for row in rows:
        status = "converged" if row["converged"] else "not converged"
        print(
            f"{row['run_id']}: objective {row['objective']:.8g}, branch {row['branch_tag']}, "
            f"{row['iterations']:g} iterations ({status}: {row['reason']})"
        )
    print(f"artifacts in {base}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .workbench import run_workbench

    manifest = RunManifest.from_json(args.manifest)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if overrides:
        manifest = RunManifest.from_dict(manifest.to_dict() | overrides)
    rows, base = run_workbench(manifest, output_root=_output_root(args), force=args.force)
    n_done = sum(1 for r in rows if r["converged"] in (True, "True"))
    print(f"{len(rows)} runs ({n_done} converged); summary at {base / 'summary.csv'}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .reporting import analyze_summary
    from .workbench import load_summary_csv

    rows = load_summary_csv(args.summary)
    out_dir = Path(_output_root(args)) / args.output_dir
    result = analyze_summary(rows, out_dir)
    print(json.dumps(result, indent=2))
    print(f"analysis written to {out_dir / 'analysis.json'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_verification

    checks = run_verification(level=args.level)
    for check in checks:
        print(check.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_NUMERICAL


def cmd_export(args) -> int:
    from .reporting import export_plot_data
    from .workbench import load_summary_csv

    rows = load_summary_csv(args.summary)
    out_dir = Path(_output_root(args)) / args.output_dir
    index = export_plot_data(rows, out_dir, render=not args.no_render)
    for name, entry in index["written"].items():
        print(f"wrote {name}: {', '.join(entry.values())}")
    for name, reason in index["absent"].items():
        print(f"absent {name}: {reason}")
    return EXIT_OK


_COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
    "export": cmd_export,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalInstabilityError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
