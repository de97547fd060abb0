"""Scalar diagnostics and time-integrated objective functionals.

Pointwise quantities (L^q norms) are evaluated by collocation quadrature with
uniform weights 1/n^3; quadratic quantities (energy, enstrophies, Sobolev
seminorms) by spectral sums, so that identities such as E = E1 + E2 + E3 hold
to roundoff by construction.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import SpectralGrid


def lq_norm(grid: SpectralGrid, uhat: np.ndarray, q: float) -> float:
    """L^q norm of the pointwise Euclidean magnitude of a vector field."""
    if q < 1.0:
        raise ValueError(f"L^q norm requires q >= 1, got {q}")
    u = grid.to_physical(uhat)
    mag_sq = np.sum(u * u, axis=0)
    if q == 2.0:
        return float(np.sqrt(np.mean(mag_sq)))
    return float(np.mean(mag_sq ** (q / 2.0)) ** (1.0 / q))


def kinetic_energy(grid: SpectralGrid, uhat: np.ndarray) -> float:
    """K = half the squared L2 norm of the velocity."""
    return 0.5 * grid.l2_inner(uhat, uhat)


def componentwise_enstrophy(grid: SpectralGrid, uhat: np.ndarray):
    """Half the squared L2 norm of each vorticity component, as a 3-tuple."""
    what = grid.curl_of(uhat)
    return tuple(
        0.5 * float(np.sum(grid.parseval_weight * np.abs(what[i]) ** 2)) for i in range(3)
    )


def enstrophy(grid: SpectralGrid, uhat: np.ndarray) -> float:
    """E = half the integrated squared vorticity."""
    return float(sum(componentwise_enstrophy(grid, uhat)))


@dataclass
class DiagnosticsRecord:
    """Snapshot of the standard scalar diagnostics at one time level."""

    t: float
    K: float
    E: float
    E1: float
    E2: float
    E3: float
    l2_norm: float
    l4_norm: float
    h34_seminorm: float

    CSV_HEADER = "t,K,E,E1,E2,E3,l2_norm,l4_norm,h34_seminorm"

    def csv_row(self) -> str:
        return (
            f"{self.t:.12g},{self.K:.12g},{self.E:.12g},{self.E1:.12g},{self.E2:.12g},"
            f"{self.E3:.12g},{self.l2_norm:.12g},{self.l4_norm:.12g},{self.h34_seminorm:.12g}"
        )


def compute_diagnostics(grid: SpectralGrid, uhat: np.ndarray, t: float) -> DiagnosticsRecord:
    e1, e2, e3 = componentwise_enstrophy(grid, uhat)
    return DiagnosticsRecord(
        t=t,
        K=kinetic_energy(grid, uhat),
        E=e1 + e2 + e3,
        E1=e1,
        E2=e2,
        E3=e3,
        l2_norm=grid.l2_norm(uhat),
        l4_norm=lq_norm(grid, uhat, 4.0),
        h34_seminorm=grid.h34_seminorm(uhat),
    )


def simpson_integral(y: np.ndarray, dx: float) -> float:
    """Composite Simpson rule; trapezoid on the last interval when the
    interval count is odd."""
    y = np.asarray(y, dtype=float)
    m = y.size - 1
    if m < 1:
        raise ValueError("quadrature requires at least 2 samples")
    total = 0.0
    even_m = m if m % 2 == 0 else m - 1
    if even_m >= 2:
        ys = y[: even_m + 1]
        total += dx / 3.0 * (ys[0] + ys[-1] + 4.0 * np.sum(ys[1:-1:2]) + 2.0 * np.sum(ys[2:-1:2]))
    if m % 2 == 1:
        total += 0.5 * dx * (y[-2] + y[-1])
    return float(total)


def time_average_power(times: np.ndarray, l4_norms: np.ndarray, p: float) -> float:
    """(1/T) * integral of ||u(t)||_{L4}^p over [0, T] from checkpoint samples."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValueError("need at least 2 checkpoints to integrate in time")
    dx = times[1] - times[0]
    horizon = times[-1] - times[0]
    values = np.asarray(l4_norms, dtype=float) ** p
    return simpson_integral(values, dx) / horizon


def objective_phi(traj, p: float) -> float:
    """Time-averaged p-th power of the L4 norm along a stored trajectory."""
    return time_average_power(traj.times, traj.l4_norms(), p)


def instantaneous_l4_rate(grid: SpectralGrid, uhat: np.ndarray, nu: float) -> float:
    """d/dt of ||u||_{L4}^4 at t=0, from the governing equations.

    Evaluates 4 * integral of |u|^2 u . du/dt with du/dt assembled from the
    projected advection term and the viscous term.
    """
    from .solver import nonlinear_term

    dudt_hat = nonlinear_term(grid, uhat) + nu * grid.laplacian_symbol * uhat
    u = grid.to_physical(uhat)
    dudt = grid.to_physical(dudt_hat)
    mag_sq = np.sum(u * u, axis=0)
    return 4.0 * float(np.mean(mag_sq * np.sum(u * dudt, axis=0)))
