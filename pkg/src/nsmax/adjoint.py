"""Backward-in-time adjoint solve producing the L2 sensitivity of the
time-averaged L4-norm objective with respect to the initial condition.

The adjoint system is linear in the adjoint variable with coefficients and a
source term built from the stored forward trajectory.  Marching in reversed
time s = T - t turns it into a well-posed diffusion problem handled by the
same integrating-factor RK4 as the forward solver; the forward state at stage
midpoints is reconstructed by cubic Hermite interpolation from the stored
states and right-hand sides.
"""

from dataclasses import dataclass

import numpy as np

from .solver import TrajectoryStore, _check_finite, _gradient_physical, step_forward
from .spectral import SpectralGrid


@dataclass
class AdjointConfig:
    """Objective exponent and forward-trajectory reference for one adjoint solve."""

    forward: TrajectoryStore
    objective_exponent: float = 8.0
    interpolation: str = "cubic-hermite"

    def __post_init__(self):
        if self.objective_exponent <= 0.0:
            raise ValueError("objective exponent must be positive")
        if self.interpolation not in ("cubic-hermite", "linear"):
            raise ValueError(f"unknown interpolation '{self.interpolation}'")


def adjoint_source(grid: SpectralGrid, uhat: np.ndarray, p: float, horizon: float) -> np.ndarray:
    """Source field (p/T) ||u||_{L4}^{p-4} |u|^2 u, de-aliased, not projected."""
    u = grid.to_physical(uhat)
    mag_sq = np.sum(u * u, axis=0)
    l4_pow4 = float(np.mean(mag_sq**2))
    if l4_pow4 == 0.0:
        return np.zeros_like(uhat)
    factor = (p / horizon) * l4_pow4 ** ((p - 4.0) / 4.0)
    f = factor * mag_sq * u
    return grid.dealias(grid.to_spectral(f))


def _source_from_physical(u, mag_sq, p, horizon):
    l4_pow4 = float(np.mean(mag_sq**2))
    if l4_pow4 == 0.0:
        return np.zeros_like(u)
    return (p / horizon) * l4_pow4 ** ((p - 4.0) / 4.0) * mag_sq * u


def solve_adjoint(config: AdjointConfig) -> np.ndarray:
    """Integrate the adjoint system from t=T (zero terminal data) back to t=0.

    The returned field is the L2 gradient of the time-averaged objective with
    respect to the initial condition; it is divergence-free with zero mean.
    """
    traj = config.forward
    grid = traj.config.grid
    if len(traj) < 2:
        raise ValueError("forward trajectory has no time interval to traverse")
    if traj.config.save_stride != 1:
        raise ValueError("adjoint solve requires a trajectory checkpointed at every step")
    p = config.objective_exponent
    horizon = traj.t_final
    dt, nu = traj.config.dt, traj.config.nu
    exp_half = np.exp(0.5 * dt * nu * grid.laplacian_symbol)
    n_steps = len(traj) - 1

    what = np.zeros((3,) + grid.shape_spec, dtype=np.complex128)
    for j in range(n_steps):
        i_hi = n_steps - j  # forward level at reversed time s_j

        def base_state(stage):
            if stage == 0:
                return traj.states[i_hi]
            if stage == 2:
                return traj.states[i_hi - 1]
            if config.interpolation == "linear":
                return 0.5 * (traj.states[i_hi - 1] + traj.states[i_hi])
            return traj.state_between(i_hi - 1, 0.5)

        cache = {}

        def stage_rhs(stage, zhat):
            if stage not in cache:
                u_base = base_state(stage)
                u = grid.to_physical(u_base)
                mag_sq = np.sum(u * u, axis=0)
                f = _source_from_physical(u, mag_sq, p, horizon)
                cache[stage] = (u, grid.dealias(grid.to_spectral(f)))
            u, f_hat = cache[stage]
            gw = _gradient_physical(grid, zhat)
            adv = np.einsum("jxyz,ijxyz->ixyz", u, gw + gw.transpose(1, 0, 2, 3, 4))
            rhs_hat = grid.dealias(grid.to_spectral(adv)) + f_hat
            return grid.leray_project(rhs_hat)

        what = step_forward(grid, what, dt, nu, exp_half=exp_half, rhs=stage_rhs)
        _check_finite(what, f"in adjoint solve at reversed step {j + 1}")
    return grid.leray_project(what)
