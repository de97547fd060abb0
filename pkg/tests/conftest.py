import numpy as np
import pytest

from nsmax.spectral import SpectralGrid


@pytest.fixture(scope="session")
def grid16():
    return SpectralGrid(16)


@pytest.fixture(scope="session")
def grid32():
    return SpectralGrid(32)


def shear_field(grid, amplitude=1.0):
    """u = (A sin(2 pi x2), 0, 0): solenoidal single mode, exact solution of
    the full nonlinear system with pure viscous decay."""
    _, y, _ = grid.collocation_points()
    u = np.stack(
        [amplitude * np.sin(2 * np.pi * y), np.zeros_like(y), np.zeros_like(y)]
    )
    return grid.to_spectral(u)


def single_mode_scalar(grid, k, amplitude=1.0):
    """cos(2 pi k.x) as a spectral scalar field."""
    x, y, z = grid.collocation_points()
    phase = 2 * np.pi * (k[0] * x + k[1] * y + k[2] * z)
    return grid.to_spectral(amplitude * np.cos(phase))
