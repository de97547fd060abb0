"""Built-in verification checks: analytic solver oracles, gradient duality
tests, and manifold-geometry residuals.

Each check returns a :class:`CheckResult` so the command-line ``verify``
entrypoint and the test suite share one implementation with pinned
tolerances.
"""

import time
from dataclasses import dataclass

import numpy as np

from .adjoint import AdjointConfig, solve_adjoint
from .functionals import objective_phi
from .manifold import (
    ConstraintSpec,
    SobolevConfig,
    constraint_residual,
    constraint_gradient,
    project_tangent,
    retract,
    sobolev_gradient,
)
from .solver import SolverConfig, solve_forward
from .spectral import SpectralGrid, random_solenoidal_field


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.elapsed:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        result.elapsed = time.perf_counter() - t0
        return result

    return wrapper


def taylor_green_field(grid: SpectralGrid, amplitude: float = 1.0) -> np.ndarray:
    """Planar vortex array whose exact solution decays as exp(-8 pi^2 nu t)."""
    x, y, _ = grid.collocation_points()
    u = np.stack(
        [
            amplitude * np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
            -amplitude * np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y),
            np.zeros_like(x),
        ]
    )
    return grid.to_spectral(u)


def taylor_green_error(n=32, dt=1e-4, nu=0.01, t_final=0.1) -> float:
    """Relative L2 error against the closed-form decaying vortex solution."""
    grid = SpectralGrid(n)
    u0 = taylor_green_field(grid)
    cfg = SolverConfig(grid=grid, nu=nu, dt=dt, t_final=t_final, save_stride=10**9)
    traj = solve_forward(grid, u0, cfg)
    exact = np.exp(-8.0 * np.pi**2 * nu * t_final) * u0
    return grid.l2_norm(traj.states[-1] - exact) / grid.l2_norm(exact)


@_timed
def check_taylor_green(n=32, dt=1e-4, nu=0.01, t_final=0.1, tol=1e-6) -> CheckResult:
    err = taylor_green_error(n=n, dt=dt, nu=nu, t_final=t_final)
    return CheckResult(
        "taylor-green decay",
        err < tol,
        f"relative L2 error {err:.3e} (tolerance {tol:.0e})",
    )


@_timed
def check_temporal_order(n=32, dt=1e-4, nu=0.01, t_final=0.1, lo=12.0, hi=20.0) -> CheckResult:
    """dt-halving ratio on the decaying-vortex oracle.

    The integrating-factor scheme integrates this flow exactly, so both
    errors sit at the roundoff floor and the ratio carries no convergence
    signal; kept for completeness of the stated battery.  Use
    :func:`check_temporal_order_nonlinear` for a measurable order check.
    """
    err_coarse = taylor_green_error(n=n, dt=dt, nu=nu, t_final=t_final)
    err_fine = taylor_green_error(n=n, dt=dt / 2.0, nu=nu, t_final=t_final)
    ratio = err_coarse / err_fine if err_fine > 0 else float("inf")
    return CheckResult(
        "temporal order on the decaying-vortex oracle",
        lo <= ratio <= hi,
        f"error ratio after dt halving {ratio:.3g} "
        f"(errors {err_coarse:.3e} -> {err_fine:.3e}; expected in [{lo:g}, {hi:g}])",
    )


@_timed
def check_temporal_order_nonlinear(
    n=16, nu=0.01, t_final=0.02, seed=5, lo=10.0, hi=22.0
) -> CheckResult:
    """Fourth-order dt self-convergence on data with active nonlinearity."""
    grid = SpectralGrid(n)
    rng = np.random.default_rng(seed)
    u0 = random_solenoidal_field(grid, rng, l2_amplitude=3.0)
    ends = {}
    for dt in (2e-3, 1e-3, 1.25e-4):
        cfg = SolverConfig(grid=grid, nu=nu, dt=dt, t_final=t_final, save_stride=10**9)
        ends[dt] = solve_forward(grid, u0, cfg).states[-1]
    err_coarse = grid.l2_norm(ends[2e-3] - ends[1.25e-4])
    err_fine = grid.l2_norm(ends[1e-3] - ends[1.25e-4])
    ratio = err_coarse / err_fine if err_fine > 0 else float("inf")
    return CheckResult(
        "temporal order on nonlinear data",
        lo <= ratio <= hi,
        f"self-convergence error ratio after dt halving {ratio:.3g} (expected ~16)",
    )


@_timed
def check_energy_balance(n=32, dt=1e-4, nu=0.01, steps=100, seed=11, tol=1e-6) -> CheckResult:
    grid = SpectralGrid(n)
    rng = np.random.default_rng(seed)
    u0 = random_solenoidal_field(grid, rng, l2_amplitude=2.0)
    cfg = SolverConfig(grid=grid, nu=nu, dt=dt, t_final=steps * dt, save_stride=1)
    traj = solve_forward(grid, u0, cfg)
    k = traj.energies()
    e = traj.enstrophies()
    # residual of dK/dt = -nu ||grad u||^2 = -2 nu E (half-inclusive E),
    # rate form, trapezoidal through each step
    resid = np.abs(np.diff(k) / dt + nu * (e[1:] + e[:-1]))
    worst = float(resid.max() / k[0])
    return CheckResult(
        "energy balance",
        worst < tol,
        f"max per-step rate residual {worst:.3e} of K(0) per unit time (tolerance {tol:.0e})",
    )


def kappa_ratios(
    p: float,
    n=32,
    horizon=0.01,
    dt=5e-4,
    nu=0.01,
    n_directions=5,
    epsilons=(1e-4, 1e-5, 1e-6, 1e-7),
    seed=7,
    amplitude=1.5,
):
    """Adjoint-gradient vs central-difference ratios for random directions."""
    grid = SpectralGrid(n)
    rng = np.random.default_rng(seed)
    u0 = random_solenoidal_field(grid, rng, l2_amplitude=amplitude)
    cfg = SolverConfig(grid=grid, nu=nu, dt=dt, t_final=horizon, save_stride=1)

    def phi(u):
        return objective_phi(solve_forward(grid, u, cfg), p)

    traj = solve_forward(grid, u0, cfg)
    g_l2 = solve_adjoint(AdjointConfig(forward=traj, objective_exponent=p))

    ratios = []
    for _ in range(n_directions):
        d = random_solenoidal_field(grid, rng, l2_amplitude=1.0)
        predicted = grid.l2_inner(g_l2, d)
        for eps in epsilons:
            fd = (phi(u0 + eps * d) - phi(u0 - eps * d)) / (2.0 * eps)
            ratios.append(predicted / fd)
    return np.array(ratios)


@_timed
def check_kappa(p: float, tol=1e-3, **kwargs) -> CheckResult:
    ratios = kappa_ratios(p, **kwargs)
    worst = float(np.abs(ratios - 1.0).max())
    return CheckResult(
        f"adjoint kappa test (p={p:g})",
        worst < tol,
        f"max |ratio-1| {worst:.2e} over {ratios.size} probes (tolerance {tol:g})",
    )


@_timed
def check_riesz_identity(n=32, ell=2.0, n_tests=10, seed=3, tol=1e-10) -> CheckResult:
    grid = SpectralGrid(n)
    rng = np.random.default_rng(seed)
    cfg = SobolevConfig(ell=ell)
    g_l2 = random_solenoidal_field(grid, rng, k_max=n / 3, l2_amplitude=1.0)
    g = sobolev_gradient(grid, g_l2, cfg)
    worst = 0.0
    for _ in range(n_tests):
        z = random_solenoidal_field(grid, rng, k_max=n / 3, l2_amplitude=1.0)
        lhs = grid.h34_inner(g, z, ell)
        rhs = grid.l2_inner(g_l2, z)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return CheckResult(
        "Riesz identity of the Sobolev gradient",
        worst < tol,
        f"max relative defect {worst:.2e} over {n_tests} test fields (tolerance {tol:.0e})",
    )


@_timed
def check_manifold_geometry(n=32, ell=2.0, seed=5, tol_tangency=1e-8, tol_retract=1e-12) -> CheckResult:
    grid = SpectralGrid(n)
    rng = np.random.default_rng(seed)
    cfg = SobolevConfig(ell=ell)
    details = []
    ok = True
    for kind, value in (("l4", 1.3), ("h34dot", 6.0), ("energy", 1.5)):
        spec = ConstraintSpec(kind=kind, value=value)
        u0 = retract(grid, random_solenoidal_field(grid, rng, l2_amplitude=1.0), spec)
        z = random_solenoidal_field(grid, rng, l2_amplitude=1.0)
        d = project_tangent(grid, z, u0, spec, cfg)
        grad_f = constraint_gradient(grid, u0, spec, cfg)
        pairing = abs(grid.h34_inner(d, grad_f, ell))
        scale = grid.h34_norm(d, ell) * grid.h34_norm(grad_f, ell)
        tangency = pairing / max(scale, 1e-300)
        resid = abs(constraint_residual(grid, retract(grid, u0 + 0.05 * d, spec), spec)) / value
        div = grid.divergence_residual(d)
        mean = float(np.abs(grid.mean_mode(d)).max())
        ok &= tangency < tol_tangency and resid < tol_retract and div < 1e-10 and mean < 1e-14
        details.append(f"{kind}: tangency {tangency:.1e}, retract {resid:.1e}, div {div:.1e}")
    return CheckResult("manifold geometry", bool(ok), "; ".join(details))


@_timed
def check_parseval(n=32, seed=1, tol=1e-12) -> CheckResult:
    grid = SpectralGrid(n)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((3,) + grid.shape_phys)
    uhat = grid.to_spectral(u)
    phys = float(np.mean(np.sum(u * u, axis=0)))
    spec = grid.l2_inner(uhat, uhat)
    rel = abs(phys - spec) / phys
    back = grid.to_physical(uhat)
    round_trip = float(np.abs(back - u).max() / np.abs(u).max())
    passed = rel < tol and round_trip < tol
    return CheckResult(
        "transform pair / Parseval",
        passed,
        f"Parseval defect {rel:.2e}, round-trip defect {round_trip:.2e}",
    )


def run_verification(level: str = "quick"):
    """Run the verification battery; 'full' includes the slow kappa tests at
    production tolerances."""
    checks = [
        check_parseval(),
        check_riesz_identity(),
        check_manifold_geometry(),
        check_energy_balance(),
    ]
    if level == "quick":
        checks.append(check_taylor_green(t_final=0.02))
        checks.append(
            check_kappa(8.0, n=16, horizon=4e-3, n_directions=2, epsilons=(1e-5, 1e-6))
        )
    else:
        checks.append(check_taylor_green())
        checks.append(check_temporal_order_nonlinear())
        checks.append(check_kappa(8.0))
        checks.append(check_kappa(8.0 / 3.0))
    return checks
