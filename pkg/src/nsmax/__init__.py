"""nsmax: adjoint-based maximization of integral velocity-norm growth in
periodic-box incompressible Navier-Stokes flows, with built-in diagnostics,
scaling fits and a priori bound audits."""

from .adjoint import AdjointConfig, adjoint_source, solve_adjoint
from .analysis import (
    PowerLawFit,
    SaturationFit,
    audit_enstrophy_bounds,
    audit_gn_inequality,
    fit_power_law,
    fit_saturation,
    lps_blowup_monitor,
    theta_limit,
    xi_ratio,
)
from .functionals import (
    DiagnosticsRecord,
    compute_diagnostics,
    componentwise_enstrophy,
    enstrophy,
    instantaneous_l4_rate,
    kinetic_energy,
    lq_norm,
    objective_phi,
)
from .manifest import RunManifest, ValidationError
from .manifold import (
    ConstraintSpec,
    SobolevConfig,
    constraint_gradient,
    constraint_residual,
    constraint_value,
    project_tangent,
    retract,
    sobolev_gradient,
)
from .optimizer import (
    OptimizationReport,
    ProblemSpec,
    arc_objective,
    brent_maximize,
    classify_branch,
    continuation,
    initial_guess,
    make_problem,
    optimize,
)
from .solver import (
    NumericalInstabilityError,
    SolverConfig,
    TrajectoryStore,
    nonlinear_term,
    solve_forward,
    solve_linearized,
    step_forward,
)
from .spectral import SpectralGrid, random_solenoidal_field, zero_vector_field

__version__ = "0.1.0"
