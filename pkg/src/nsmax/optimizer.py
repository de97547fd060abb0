"""Projected gradient ascent on the constraint manifold.

Each iteration evaluates the objective and its H^{3/4} gradient through a
forward/adjoint pair, projects the gradient onto the tangent space of the
constraint sphere, and maximizes the objective along the retracted arc
u -> R(u + tau d) with a derivative-free bracketing/Brent search.  Accepted
steps never decrease the objective; a zero step triggers the convergence
tests.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .adjoint import AdjointConfig, solve_adjoint
from .functionals import componentwise_enstrophy, objective_phi
from .manifold import (
    ENERGY_SPHERE,
    H34_SPHERE,
    L4_SPHERE,
    ConstraintSpec,
    SobolevConfig,
    constraint_residual,
    project_tangent,
    retract,
    sobolev_gradient,
)
from .solver import (
    NumericalInstabilityError,
    SolverConfig,
    cfl_number,
    solve_forward,
)
from .spectral import SpectralGrid, random_solenoidal_field

# candidate steps whose advective CFL estimate exceeds this are rejected
# outright instead of being handed to the solver
CFL_REJECT = 1.0

PROBLEM_KINDS = {
    "problem1": (L4_SPHERE, 8.0),
    "problem2": (H34_SPHERE, 8.0),
    "problem3": (ENERGY_SPHERE, 8.0 / 3.0),
}


@dataclass
class ProblemSpec:
    """Full configuration of one optimization run."""

    which: str
    constraint: ConstraintSpec
    solver: SolverConfig
    sobolev: SobolevConfig = field(default_factory=SobolevConfig)
    objective_exponent: float | None = None

    def __post_init__(self):
        if self.which not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem '{self.which}'")
        kind, exponent = PROBLEM_KINDS[self.which]
        if self.constraint.kind != kind:
            raise ValueError(
                f"{self.which} requires a '{kind}' constraint, got '{self.constraint.kind}'"
            )
        if self.objective_exponent is None:
            self.objective_exponent = exponent
        elif abs(self.objective_exponent - exponent) > 1e-12:
            raise ValueError(
                f"{self.which} uses objective exponent {exponent}, got {self.objective_exponent}"
            )

    @property
    def horizon(self) -> float:
        return self.solver.t_final

    @property
    def grid(self) -> SpectralGrid:
        return self.solver.grid


def make_problem(
    which: str,
    constraint_value: float,
    horizon: float,
    grid: SpectralGrid,
    nu: float = 0.01,
    dt: float = 1e-4,
    ell: float = 2.0,
) -> ProblemSpec:
    """Convenience constructor wiring the constraint kind to the problem."""
    kind, _ = PROBLEM_KINDS[which]
    solver = SolverConfig(grid=grid, nu=nu, dt=dt, t_final=horizon, save_stride=1)
    return ProblemSpec(
        which=which,
        constraint=ConstraintSpec(kind=kind, value=constraint_value),
        solver=solver,
        sobolev=SobolevConfig(ell=ell),
    )


@dataclass
class IterateRecord:
    iteration: int
    objective: float
    tau: float
    grad_h34_norm: float
    constraint_residual: float
    wall_time: float


@dataclass
class OptimizationReport:
    """Per-iteration record of one gradient-ascent run."""

    problem: ProblemSpec
    iterates: list[IterateRecord]
    final_u0: np.ndarray | None
    converged: bool
    reason: str
    branch_tag: str = ""

    @property
    def objective(self) -> float:
        return self.iterates[-1].objective if self.iterates else float("nan")

    def objective_history(self) -> np.ndarray:
        return np.array([rec.objective for rec in self.iterates])


def classify_branch(grid: SpectralGrid, uhat: np.ndarray, rel_tol: float = 0.05) -> str:
    """Symmetry tag from the componentwise enstrophies of a field."""
    e_sorted = sorted(componentwise_enstrophy(grid, uhat), reverse=True)
    a, b, c = e_sorted
    if a <= 0.0:
        return "zero"
    if (a - c) <= rel_tol * a:
        return "symmetric"
    if c <= rel_tol * a:
        return "two-component"
    if (a - b) <= rel_tol * a:
        return "partially-symmetric"
    return "asymmetric"


def initial_guess(
    grid: SpectralGrid,
    spec: ConstraintSpec,
    rng: np.random.Generator,
    k_max: float = 4.0,
) -> np.ndarray:
    """Random solenoidal low-pass field retracted onto the constraint sphere."""
    uhat = random_solenoidal_field(grid, rng, k_max=k_max, decay=1.0, l2_amplitude=1.0)
    return retract(grid, uhat, spec)


def arc_objective(problem: ProblemSpec, u0hat: np.ndarray, direction: np.ndarray, tau: float) -> float:
    """Objective at the retracted point u0 + tau*direction; -inf when rejected."""
    value, _ = _arc_eval(problem, u0hat, direction, tau)
    return value


def _arc_eval(problem, u0hat, direction, tau):
    grid = problem.grid
    if tau == 0.0:
        # the base point already lives on the manifold; re-retracting would
        # perturb it by roundoff and break exact agreement at tau = 0
        candidate = u0hat
    else:
        try:
            candidate = retract(grid, u0hat + tau * direction, problem.constraint)
        except ValueError:
            return float("-inf"), None
    if cfl_number(grid, candidate, problem.solver.dt) > CFL_REJECT:
        return float("-inf"), None
    try:
        traj = solve_forward(grid, candidate, problem.solver)
    except NumericalInstabilityError:
        return float("-inf"), None
    return objective_phi(traj, problem.objective_exponent), (candidate, traj)


def brent_maximize(phi_of_tau, bracket, rel_tol: float = 1e-4, max_evals: int = 25):
    """Derivative-free maximization of phi within a bracket.

    ``bracket`` is (a, b) or (a, m, b); evaluations are capped at
    ``max_evals`` and the best evaluated point is returned.  When no interior
    point beats the left endpoint the left endpoint itself (conventionally
    tau=0) is returned.
    Returns (tau_best, phi_best).
    """
    golden = 0.381966011250105
    if len(bracket) == 3:
        a, m, b = (float(t) for t in bracket)
    else:
        a, b = (float(t) for t in bracket)
        m = a + golden * (b - a)
    if not (a <= m <= b):
        raise ValueError("bracket midpoint outside interval")
    fa = phi_of_tau(a)
    fm = phi_of_tau(m)
    best_t, best_f = (m, fm) if fm >= fa else (a, fa)

    # Brent's minimization of -phi on [a, b]
    x = w = v = m
    fx = fw = fv = -fm
    d = e = 0.0
    evals = 0
    while evals < max_evals:
        mid = 0.5 * (a + b)
        tol1 = rel_tol * abs(x) + 1e-14
        tol2 = 2.0 * tol1
        if abs(x - mid) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            pnum = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                pnum = -pnum
            q = abs(q)
            e_old, e = e, d
            if abs(pnum) < abs(0.5 * q * e_old) and q * (a - x) < pnum < q * (b - x):
                d = pnum / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if x < mid else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < mid else (a - x)
            d = golden * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0 else -tol1)
        fu_pos = phi_of_tau(u)
        evals += 1
        fu = -fu_pos
        if fu_pos > best_f:
            best_t, best_f = u, fu_pos
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    if best_t == bracket[0] or best_f <= fa:
        return 0.0, fa
    return best_t, best_f


def _expand_bracket(phi, phi0, tau_start, grow=2.0, max_expand=30, max_shrink=20):
    """Doubling/halving search for a bracket (lo, t, hi) with phi(t) > phi0.

    Returns None when no ascent was found within the shrink budget.
    """
    tau = tau_start
    f = phi(tau)
    shrinks = 0
    while f <= phi0 and shrinks < max_shrink:
        tau /= grow
        f = phi(tau)
        shrinks += 1
    if f <= phi0:
        return None
    lo, best_t, best_f = 0.0, tau, f
    hi = tau * grow
    f_hi = phi(hi)
    expands = 0
    while f_hi > best_f and expands < max_expand:
        lo, best_t, best_f = best_t, hi, f_hi
        hi = best_t * grow
        f_hi = phi(hi)
        expands += 1
    return (lo, best_t, hi)


def optimize(
    problem: ProblemSpec,
    u0_guess: np.ndarray,
    max_iterations: int = 500,
    objective_stall_tol: float = 1e-6,
    stall_iterations: int = 3,
    gradient_tol: float = 1e-8,
    tau_init_scale: float = 1e-3,
    callback=None,
) -> OptimizationReport:
    """Run the discrete projected gradient flow from a given initial guess.

    The guess is projected onto the divergence-free zero-mean subspace and
    retracted onto the constraint sphere before the first iteration.  Solver
    aborts propagate with context.
    """
    grid = problem.grid
    spec = problem.constraint
    cfg = problem.sobolev
    p = problem.objective_exponent

    if u0_guess is None or not np.any(u0_guess):
        raise ValueError("initial guess must be nonzero")
    u0 = retract(grid, grid.leray_project(u0_guess), spec)

    t_start = time.perf_counter()
    value, state = _arc_eval(problem, u0, u0, 0.0)
    if state is None:
        raise NumericalInstabilityError("forward solve failed at the initial guess")
    u0, traj = state
    iterates = [
        IterateRecord(
            iteration=0,
            objective=value,
            tau=0.0,
            grad_h34_norm=float("nan"),
            constraint_residual=constraint_residual(grid, u0, spec),
            wall_time=time.perf_counter() - t_start,
        )
    ]

    converged, reason = False, "iteration limit reached"
    tau_warm = None
    stall_count = 0
    for it in range(1, max_iterations + 1):
        t_iter = time.perf_counter()
        g_l2 = solve_adjoint(AdjointConfig(forward=traj, objective_exponent=p))
        g = sobolev_gradient(grid, g_l2, cfg)
        direction = project_tangent(grid, g, u0, spec, cfg)
        grad_norm = grid.h34_norm(direction, cfg.ell)
        if grad_norm < gradient_tol * grid.h34_norm(u0, cfg.ell):
            converged, reason = True, "tangent gradient below tolerance"
            break

        memo = {}

        def phi(tau):
            if tau not in memo:
                memo[tau] = _arc_eval(problem, u0, direction, tau)
            return memo[tau][0]

        tau_start = tau_warm if tau_warm else tau_init_scale / grad_norm
        bracket = _expand_bracket(phi, value, tau_start)
        if bracket is None:
            converged, reason = True, "no ascent along projected gradient"
            break
        tau_n, value_new = brent_maximize(phi, bracket)
        if tau_n == 0.0 or value_new <= value:
            converged, reason = True, "line search found no improvement"
            break
        u0, traj = memo[tau_n][1]
        rel_gain = (value_new - value) / max(abs(value), 1e-300)
        value = value_new
        tau_warm = tau_n
        iterates.append(
            IterateRecord(
                iteration=it,
                objective=value,
                tau=tau_n,
                grad_h34_norm=grad_norm,
                constraint_residual=constraint_residual(grid, u0, spec),
                wall_time=time.perf_counter() - t_iter,
            )
        )
        if callback is not None:
            callback(it, value, tau_n, grad_norm)
        stall_count = stall_count + 1 if rel_gain < objective_stall_tol else 0
        if stall_count >= stall_iterations:
            converged, reason = True, "relative objective increment stalled"
            break

    return OptimizationReport(
        problem=problem,
        iterates=iterates,
        final_u0=u0,
        converged=converged,
        reason=reason,
        branch_tag=classify_branch(grid, u0),
    )


def continuation(problems, seed_guess: np.ndarray, **optimize_kwargs):
    """Solve an ordered family of problems, seeding each run with the
    previous optimum (retracted onto the new sphere inside ``optimize``).

    Failures are recorded as non-converged reports and the family continues
    from the last successful optimum.
    """
    problems = list(problems)
    if not problems:
        return []
    base_grid = problems[0].grid
    for prob in problems[1:]:
        if prob.grid is not base_grid or prob.solver.nu != problems[0].solver.nu:
            raise ValueError("continuation family must share one grid and viscosity")
    reports = []
    guess = seed_guess
    for prob in problems:
        try:
            report = optimize(prob, guess, **optimize_kwargs)
        except NumericalInstabilityError as exc:
            report = OptimizationReport(
                problem=prob,
                iterates=[],
                final_u0=None,
                converged=False,
                reason=f"aborted: {exc}",
                branch_tag="failed",
            )
        reports.append(report)
        if report.final_u0 is not None:
            guess = report.final_u0
    return reports
