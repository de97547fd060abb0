"""Forward and linearized time integration of the incompressible dynamics.

The pressure never appears: every right-hand side is Leray-projected, which
confines the evolution to the divergence-free zero-mean subspace.  Time
stepping is an integrating-factor classical RK4: the viscous term is advanced
by its exact exponential while the projected advection term is treated
explicitly, so the linear part is unconditionally stable and the nonlinear
part carries the usual fourth-order accuracy.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .functionals import DiagnosticsRecord, compute_diagnostics
from .spectral import SpectralGrid

CFL_SAFETY = 0.5


class NumericalInstabilityError(RuntimeError):
    """Raised when the state stops being finite during time stepping."""


@dataclass
class SolverConfig:
    """Time-integration parameters for one forward solve."""

    grid: SpectralGrid
    nu: float = 0.01
    dt: float = 5e-4
    t_final: float = 1e-2
    save_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_final <= 0.0:
            raise ValueError("t_final must be positive")
        if self.save_stride < 1:
            raise ValueError("save_stride must be >= 1")
        # dt > T degenerates to a single step of size T; otherwise shrink dt
        # so that t_final is an integer multiple of it.
        if self.dt >= self.t_final:
            self.dt = self.t_final
        else:
            n_steps = int(np.ceil(self.t_final / self.dt - 1e-12))
            self.dt = self.t_final / n_steps

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


class TrajectoryStore:
    """Checkpointed forward solution consumed in reverse by the adjoint.

    Stores the spectral state and, when ``save_stride == 1``, the full
    right-hand side at every level so that stage values between steps can be
    reconstructed by cubic Hermite interpolation.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.derivs: list[np.ndarray] = []
        self.diagnostics: list[DiagnosticsRecord] = []

    def append(self, t, uhat, ghat, record):
        self.times.append(float(t))
        self.states.append(uhat)
        self.derivs.append(ghat)
        self.diagnostics.append(record)

    def __len__(self):
        return len(self.states)

    @property
    def t_final(self) -> float:
        return self.times[-1]

    def l4_norms(self) -> np.ndarray:
        return np.array([rec.l4_norm for rec in self.diagnostics])

    def energies(self) -> np.ndarray:
        return np.array([rec.K for rec in self.diagnostics])

    def enstrophies(self) -> np.ndarray:
        return np.array([rec.E for rec in self.diagnostics])

    def times_array(self) -> np.ndarray:
        return np.array(self.times)

    def state_between(self, j: int, theta: float) -> np.ndarray:
        """Cubic Hermite reconstruction of the state at time t_j + theta*dt."""
        if theta == 0.0:
            return self.states[j]
        if theta == 1.0:
            return self.states[j + 1]
        dt = self.times[j + 1] - self.times[j]
        h00 = (1 + 2 * theta) * (1 - theta) ** 2
        h10 = theta * (1 - theta) ** 2
        h01 = theta**2 * (3 - 2 * theta)
        h11 = theta**2 * (theta - 1)
        return (
            h00 * self.states[j]
            + (h10 * dt) * self.derivs[j]
            + h01 * self.states[j + 1]
            + (h11 * dt) * self.derivs[j + 1]
        )


def nonlinear_term(grid: SpectralGrid, uhat: np.ndarray) -> np.ndarray:
    """Projected advection term -P(u . grad u), de-aliased after the product."""
    u = grid.to_physical(uhat)
    two_pi_i = 2.0j * np.pi
    grad_hat = np.empty((3, 3) + grid.shape_spec, dtype=np.complex128)
    for i in range(3):
        grad_hat[i, 0] = two_pi_i * grid.kx * uhat[i]
        grad_hat[i, 1] = two_pi_i * grid.ky * uhat[i]
        grad_hat[i, 2] = two_pi_i * grid.kz * uhat[i]
    grad = grid.to_physical(grad_hat)
    adv = np.einsum("jxyz,ijxyz->ixyz", u, grad)
    adv_hat = grid.to_spectral(adv)
    return grid.leray_project(-grid.dealias(adv_hat))


def full_rhs(grid: SpectralGrid, uhat: np.ndarray, nu: float) -> np.ndarray:
    """Complete time derivative: projected advection plus viscous diffusion."""
    return nonlinear_term(grid, uhat) + nu * grid.laplacian_symbol * uhat


def _check_finite(uhat: np.ndarray, context: str):
    if not np.isfinite(uhat.view(np.float64).max()):
        raise NumericalInstabilityError(f"non-finite state detected {context}")


def step_forward(
    grid: SpectralGrid,
    uhat: np.ndarray,
    dt: float,
    nu: float,
    exp_half: np.ndarray | None = None,
    rhs=None,
    k1: np.ndarray | None = None,
) -> np.ndarray:
    """One integrating-factor RK4 step of du/dt = rhs_nonlinear(u) + nu*Lap u.

    ``rhs`` defaults to the projected advection term; the linearized and
    adjoint systems reuse this stepper with their own stage functions, in
    which case ``rhs(stage_index, uhat)`` receives the stage index (0, 1, 1, 2
    marking times t, t+dt/2, t+dt).  ``k1`` lets callers pass an already
    computed first-stage slope.
    """
    if exp_half is None:
        exp_half = np.exp(0.5 * dt * nu * grid.laplacian_symbol)
    if rhs is None:
        n_of = lambda stage, zhat: nonlinear_term(grid, zhat)
    else:
        n_of = rhs
    e_u = exp_half * uhat
    if k1 is None:
        k1 = n_of(0, uhat)
    k2 = n_of(1, exp_half * (uhat + (0.5 * dt) * k1))
    k3 = n_of(1, e_u + (0.5 * dt) * k2)
    k4 = n_of(2, exp_half * (e_u + dt * k3))
    return exp_half * (e_u + (dt / 6.0) * (exp_half * k1 + 2.0 * (k2 + k3))) + (dt / 6.0) * k4


def cfl_number(grid: SpectralGrid, uhat: np.ndarray, dt: float) -> float:
    """Advective CFL estimate dt * max|u| * n."""
    u = grid.to_physical(uhat)
    return float(dt * np.sqrt(np.sum(u * u, axis=0)).max() * grid.n)


def solve_forward(grid: SpectralGrid, u0hat: np.ndarray, config: SolverConfig) -> TrajectoryStore:
    """March the full nonlinear system on [0, T], checkpointing as configured."""
    if u0hat.shape != (3,) + grid.shape_spec:
        raise ValueError("initial state shape does not match grid")
    cfl = cfl_number(grid, u0hat, config.dt)
    if cfl > CFL_SAFETY:
        warnings.warn(
            f"advective CFL estimate {cfl:.3g} exceeds safety bound {CFL_SAFETY}",
            RuntimeWarning,
            stacklevel=2,
        )
    dt, nu = config.dt, config.nu
    exp_half = np.exp(0.5 * dt * nu * grid.laplacian_symbol)

    traj = TrajectoryStore(config)
    uhat = u0hat.copy()
    # the first RK stage of each step doubles as the checkpoint derivative
    advect = nonlinear_term(grid, uhat)
    viscous = lambda zhat: nu * grid.laplacian_symbol * zhat
    traj.append(0.0, uhat, advect + viscous(uhat), compute_diagnostics(grid, uhat, 0.0))
    for j in range(1, config.n_steps + 1):
        uhat = step_forward(grid, uhat, dt, nu, exp_half=exp_half, k1=advect)
        _check_finite(uhat, f"at step {j} (t={j * dt:.6g})")
        advect = nonlinear_term(grid, uhat)
        if j % config.save_stride == 0 or j == config.n_steps:
            t = j * dt
            traj.append(t, uhat, advect + viscous(uhat), compute_diagnostics(grid, uhat, t))
    return traj


def _advection_pair(grid: SpectralGrid, u_base: np.ndarray, grad_base: np.ndarray, zhat: np.ndarray):
    """Physical-space z . grad(u_base) + u_base . grad(z) for the linearized system."""
    z = grid.to_physical(zhat)
    two_pi_i = 2.0j * np.pi
    gz_hat = np.empty((3, 3) + grid.shape_spec, dtype=np.complex128)
    for i in range(3):
        gz_hat[i, 0] = two_pi_i * grid.kx * zhat[i]
        gz_hat[i, 1] = two_pi_i * grid.ky * zhat[i]
        gz_hat[i, 2] = two_pi_i * grid.kz * zhat[i]
    gz = grid.to_physical(gz_hat)
    return np.einsum("jxyz,ijxyz->ixyz", z, grad_base) + np.einsum(
        "jxyz,ijxyz->ixyz", u_base, gz
    )


def _gradient_physical(grid: SpectralGrid, uhat: np.ndarray) -> np.ndarray:
    two_pi_i = 2.0j * np.pi
    grad_hat = np.empty((3, 3) + grid.shape_spec, dtype=np.complex128)
    for i in range(3):
        grad_hat[i, 0] = two_pi_i * grid.kx * uhat[i]
        grad_hat[i, 1] = two_pi_i * grid.ky * uhat[i]
        grad_hat[i, 2] = two_pi_i * grid.kz * uhat[i]
    return grid.to_physical(grad_hat)


def solve_linearized(
    traj: TrajectoryStore,
    u0p_hat: np.ndarray,
    return_trajectory: bool = False,
):
    """Integrate the system linearized around a stored trajectory.

    Requires the trajectory to be checkpointed at every step so that the
    background state at RK stage midpoints can be reconstructed.  Returns the
    perturbation at the final time, and optionally the full list of states.
    """
    grid = traj.config.grid
    if u0p_hat.shape != (3,) + grid.shape_spec:
        raise ValueError("perturbation shape does not match trajectory grid")
    if traj.config.save_stride != 1:
        raise ValueError("linearized solve requires a trajectory checkpointed at every step")
    dt, nu = traj.config.dt, traj.config.nu
    exp_half = np.exp(0.5 * dt * nu * grid.laplacian_symbol)

    zhat = u0p_hat.copy()
    history = [zhat.copy()] if return_trajectory else None
    for j in range(len(traj) - 1):
        bases = (
            traj.states[j],
            traj.state_between(j, 0.5),
            traj.states[j + 1],
        )
        cache = {}

        def stage_rhs(stage, z):
            if stage not in cache:
                u_base = bases[stage]
                cache[stage] = (grid.to_physical(u_base), _gradient_physical(grid, u_base))
            u_b, grad_b = cache[stage]
            adv = _advection_pair(grid, u_b, grad_b, z)
            return grid.leray_project(-grid.dealias(grid.to_spectral(adv)))

        zhat = step_forward(grid, zhat, dt, nu, exp_half=exp_half, rhs=stage_rhs)
        _check_finite(zhat, f"in linearized solve at step {j + 1}")
        if return_trajectory:
            history.append(zhat.copy())
    if return_trajectory:
        return zhat, history
    return zhat
