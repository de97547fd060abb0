"""Constraint-manifold geometry for the three sphere constraints.

The optimization state lives on one of three spheres inside the
divergence-free zero-mean subspace of H^{3/4}: fixed L4 norm, fixed
Hdot^{3/4} seminorm, or fixed kinetic energy.  This module provides the
constraint residuals, the Riesz representers of the constraint differentials,
tangent-space projections and the normalizing retraction.

All Riesz inversions are diagonal in Fourier space with the weight
(1 + ell^{3/2} |k|^{3/2}); the k=0 component is pinned to zero, which keeps
every output mean-free.
"""

from dataclasses import dataclass

import numpy as np

from .functionals import kinetic_energy, lq_norm
from .spectral import SpectralGrid

L4_SPHERE = "l4"
H34_SPHERE = "h34dot"
ENERGY_SPHERE = "energy"
_KINDS = (L4_SPHERE, H34_SPHERE, ENERGY_SPHERE)


@dataclass(frozen=True)
class ConstraintSpec:
    """Which sphere the initial data lives on, and its radius-like value.

    ``value`` is the L4 norm, the Hdot^{3/4} seminorm, or the kinetic energy
    depending on ``kind``.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown constraint kind '{self.kind}'")
        if self.value <= 0.0:
            raise ValueError("constraint value must be positive")


@dataclass(frozen=True)
class SobolevConfig:
    """Length-scale parameter of the H^{3/4} inner product."""

    ell: float = 2.0
    s: float = 0.75

    def __post_init__(self):
        if self.ell <= 0.0:
            raise ValueError("ell must be positive")


def constraint_value(grid: SpectralGrid, uhat: np.ndarray, spec: ConstraintSpec) -> float:
    """The constrained quantity itself: L4 norm, Hdot^{3/4} seminorm, or energy."""
    if spec.kind == L4_SPHERE:
        return lq_norm(grid, uhat, 4.0)
    if spec.kind == H34_SPHERE:
        return grid.h34_seminorm(uhat)
    return kinetic_energy(grid, uhat)


def constraint_residual(grid: SpectralGrid, uhat: np.ndarray, spec: ConstraintSpec) -> float:
    return constraint_value(grid, uhat, spec) - spec.value


def sobolev_gradient(grid: SpectralGrid, g_l2: np.ndarray, cfg: SobolevConfig) -> np.ndarray:
    """H^{3/4} Riesz representer of the differential whose L2 representer is g_l2.

    Diagonal solve (1 + ell^{3/2}|k|^{3/2}) ghat = g_l2_hat with the mean
    pinned to zero.
    """
    out = g_l2 / (1.0 + cfg.ell**1.5 * grid.k_32)
    out = out.copy()
    out[..., 0, 0, 0] = 0.0
    return out


def constraint_gradient(
    grid: SpectralGrid, uhat: np.ndarray, spec: ConstraintSpec, cfg: SobolevConfig
) -> np.ndarray:
    """H^{3/4} representer of the constraint differential at ``uhat``.

    Defined (up to an irrelevant positive scale) through the pairings
    <grad, z>_{H^{3/4}} = <u, z>_{Hdot^{3/4}}         (seminorm sphere)
                        = <|u|^2 u, z>_{Hdot^{3/4}}   (L4 sphere)
                        = <u, z>_{L2}                 (energy sphere).
    """
    weight = 1.0 + cfg.ell**1.5 * grid.k_32
    if spec.kind == ENERGY_SPHERE:
        out = uhat / weight
    else:
        if spec.kind == H34_SPHERE:
            w_hat = uhat
        else:
            u = grid.to_physical(uhat)
            mag_sq = np.sum(u * u, axis=0)
            w_hat = grid.dealias(grid.to_spectral(mag_sq * u))
        out = grid.k_32 * w_hat / weight
    out = out.copy()
    out[..., 0, 0, 0] = 0.0
    return out


def project_tangent(
    grid: SpectralGrid,
    zhat: np.ndarray,
    u0hat: np.ndarray,
    spec: ConstraintSpec,
    cfg: SobolevConfig,
) -> np.ndarray:
    """Project ``zhat`` onto the tangent space of the constraint sphere at ``u0hat``.

    For the quadratic constraints this is the H^{3/4}-orthogonal projection.
    For the L4 sphere the constraint representer is not solenoidal, so the
    update direction is its divergence-free zero-mean part and the projection
    is oblique; the result is tangent, divergence-free and mean-free.
    """
    grad_f = constraint_gradient(grid, u0hat, spec, cfg)
    num = grid.h34_inner(zhat, grad_f, cfg.ell)
    if spec.kind == L4_SPHERE:
        grad_f_bar = grid.leray_project(grad_f)
        den = grid.h34_inner(grad_f_bar, grad_f, cfg.ell)
        direction = grad_f_bar
    else:
        den = grid.h34_inner(grad_f, grad_f, cfg.ell)
        direction = grad_f
    scale = grid.h34_inner(zhat, zhat, cfg.ell)
    if abs(den) <= 1e-28 * max(scale, 1.0):
        raise ValueError("degenerate constraint gradient")
    return zhat - (num / den) * direction


def retract(grid: SpectralGrid, zhat: np.ndarray, spec: ConstraintSpec) -> np.ndarray:
    """Scale ``zhat`` back onto the constraint sphere (direction preserved)."""
    current = constraint_value(grid, zhat, spec)
    if current <= 0.0:
        raise ValueError("cannot retract a zero field onto the sphere")
    if spec.kind == ENERGY_SPHERE:
        return zhat * np.sqrt(spec.value / current)
    return zhat * (spec.value / current)
