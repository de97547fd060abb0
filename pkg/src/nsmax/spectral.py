"""Fourier-space representation of periodic fields on the unit cube.

Fields live on [0,1]^3 with periodic boundary conditions and are stored as
complex coefficients of the half-spectrum real FFT (``rfftn`` layout), scaled
so that ``uhat[k]`` is the coefficient of ``exp(2*pi*i*k.x)``.  Two wavenumber
conventions coexist deliberately:

* differentiation multiplies by the physical frequency ``2*pi*i*k``;
* norm weights, the fractional Laplacian and the Sobolev preconditioner use
  the bare integer-lattice magnitude ``|k|``.

All operators here are diagonal (mode-local) or pointwise, so they commute
where expected and preserve Hermitian symmetry structurally.
"""

import os

import numpy as np
import scipy.fft as _fft


def fft_workers() -> int:
    """Worker count for FFT calls, from NSMAX_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("NSMAX_THREADS", "1")))
    except ValueError:
        return 1


class SpectralGrid:
    """Wavevector lattice and mode-local operators for an n^3 collocation grid.

    Parameters
    ----------
    n : even positive integer, collocation points per dimension.

    Attributes of note: ``kx, ky, kz`` broadcastable integer wavevectors,
    ``k_sq`` integer |k|^2, ``parseval_weight`` multiplicity of each stored
    mode (2 for modes whose conjugate partner is implied by the half-spectrum
    storage, 1 otherwise), ``dealias_multiplier`` the high-order exponential
    low-pass filter.
    """

    def __init__(self, n: int):
        if n <= 0 or n % 2 != 0:
            raise ValueError(f"grid size must be a positive even integer, got {n}")
        self.n = n
        self.shape_phys = (n, n, n)
        nz = n // 2 + 1
        self.shape_spec = (n, n, nz)

        k1 = np.fft.fftfreq(n, d=1.0 / n)          # 0..n/2-1, -n/2..-1
        k3 = np.arange(nz, dtype=float)             # 0..n/2
        self.kx = k1[:, None, None]
        self.ky = k1[None, :, None]
        self.kz = k3[None, None, :]
        self.k_sq = self.kx**2 + self.ky**2 + self.kz**2
        self._k_sq_safe = np.where(self.k_sq == 0.0, 1.0, self.k_sq)
        self.k_mag = np.sqrt(self.k_sq)

        # |k|^{3/2} weight of the Hdot^{3/4} pairing
        self.k_32 = self.k_sq ** 0.75

        kz_index = np.arange(nz)
        w = np.where((kz_index > 0) & (kz_index < n // 2), 2.0, 1.0)
        self.parseval_weight = np.broadcast_to(
            w[None, None, :], self.shape_spec
        ).copy()

        k_inf = np.maximum(np.abs(self.kx), np.maximum(np.abs(self.ky), np.abs(self.kz)))
        self.dealias_multiplier = np.exp(-36.0 * (k_inf / (n / 2)) ** 36)

        # -(2*pi)^2 |k|^2, the symbol of the physical Laplacian
        self.laplacian_symbol = -((2.0 * np.pi) ** 2) * self.k_sq

    # ------------------------------------------------------------------
    # transforms
    # ------------------------------------------------------------------

    def to_physical(self, fhat: np.ndarray) -> np.ndarray:
        """Inverse transform of one or more fields (last three axes)."""
        if fhat.shape[-3:] != self.shape_spec:
            raise ValueError(
                f"spectral shape {fhat.shape[-3:]} does not match grid {self.shape_spec}"
            )
        scale = float(self.n) ** 3
        return _fft.irfftn(
            fhat * scale, s=self.shape_phys, axes=(-3, -2, -1), workers=fft_workers()
        )

    def to_spectral(self, f: np.ndarray) -> np.ndarray:
        """Forward transform of one or more real fields (last three axes)."""
        if f.shape[-3:] != self.shape_phys:
            raise ValueError(
                f"physical shape {f.shape[-3:]} does not match grid {self.shape_phys}"
            )
        scale = float(self.n) ** 3
        return _fft.rfftn(f, axes=(-3, -2, -1), workers=fft_workers()) / scale

    def collocation_points(self):
        """Meshgrid arrays x1, x2, x3 of the collocation nodes."""
        x = np.arange(self.n) / self.n
        return np.meshgrid(x, x, x, indexing="ij")

    # ------------------------------------------------------------------
    # differential operators (physical frequency 2*pi*k)
    # ------------------------------------------------------------------

    def gradient_of(self, fhat: np.ndarray) -> np.ndarray:
        """Spectral gradient of a scalar field, returns shape (3, ...)."""
        two_pi_i = 2.0j * np.pi
        return np.stack(
            [two_pi_i * self.kx * fhat, two_pi_i * self.ky * fhat, two_pi_i * self.kz * fhat]
        )

    def divergence_of(self, vhat: np.ndarray) -> np.ndarray:
        """Spectral divergence of a 3-component field."""
        two_pi_i = 2.0j * np.pi
        return two_pi_i * (self.kx * vhat[0] + self.ky * vhat[1] + self.kz * vhat[2])

    def curl_of(self, vhat: np.ndarray) -> np.ndarray:
        """Spectral curl of a 3-component field."""
        two_pi_i = 2.0j * np.pi
        return np.stack(
            [
                two_pi_i * (self.ky * vhat[2] - self.kz * vhat[1]),
                two_pi_i * (self.kz * vhat[0] - self.kx * vhat[2]),
                two_pi_i * (self.kx * vhat[1] - self.ky * vhat[0]),
            ]
        )

    # ------------------------------------------------------------------
    # mode-local operators (integer-lattice |k|)
    # ------------------------------------------------------------------

    def fractional_laplacian(self, zhat: np.ndarray, s: float) -> np.ndarray:
        """Multiply mode k by |k|^s on the integer lattice.

        The k=0 mode maps to 0 for s>0; for s<0 a nonzero mean has no
        well-defined image and raises.
        """
        if s == 0.0:
            return zhat.copy()
        if s < 0.0:
            mean = np.abs(zhat[..., 0, 0, 0]).max()
            scale = np.abs(zhat).max()
            if mean > 1e-13 * max(scale, 1e-300):
                raise ValueError("negative-order fractional Laplacian of a field with nonzero mean")
        with np.errstate(divide="ignore"):
            factor = np.where(self.k_sq > 0.0, self._k_sq_safe ** (s / 2.0), 0.0)
        return zhat * factor

    def leray_project(self, vhat: np.ndarray) -> np.ndarray:
        """Remove the gradient part and the mean: v - grad(inv_lap(div v)) - mean(v)."""
        kdotv = self.kx * vhat[0] + self.ky * vhat[1] + self.kz * vhat[2]
        coef = kdotv / self._k_sq_safe
        out = np.stack(
            [vhat[0] - self.kx * coef, vhat[1] - self.ky * coef, vhat[2] - self.kz * coef]
        )
        out[:, 0, 0, 0] = 0.0
        return out

    def dealias(self, fhat: np.ndarray) -> np.ndarray:
        """Apply the 36th-order exponential low-pass filter."""
        return fhat * self.dealias_multiplier

    # ------------------------------------------------------------------
    # inner products and norms
    # ------------------------------------------------------------------

    def _check_pair(self, ahat, bhat):
        if ahat.shape != bhat.shape or ahat.shape[-3:] != self.shape_spec:
            raise ValueError(
                f"field shapes {ahat.shape} / {bhat.shape} do not match grid {self.shape_spec}"
            )

    def l2_inner(self, ahat: np.ndarray, bhat: np.ndarray) -> float:
        """L2 inner product over the unit cube (spectral sum)."""
        self._check_pair(ahat, bhat)
        return float(np.sum(self.parseval_weight * (ahat * np.conj(bhat)).real))

    def h34dot_inner(self, ahat: np.ndarray, bhat: np.ndarray) -> float:
        """Hdot^{3/4} pairing: spectral sum weighted by |k|^{3/2}."""
        self._check_pair(ahat, bhat)
        return float(np.sum(self.parseval_weight * self.k_32 * (ahat * np.conj(bhat)).real))

    def h34_inner(self, ahat: np.ndarray, bhat: np.ndarray, ell: float) -> float:
        """H^{3/4} inner product: L2 part plus ell^{3/2} times the Hdot^{3/4} part."""
        self._check_pair(ahat, bhat)
        weight = self.parseval_weight * (1.0 + ell**1.5 * self.k_32)
        return float(np.sum(weight * (ahat * np.conj(bhat)).real))

    def l2_norm(self, ahat: np.ndarray) -> float:
        return np.sqrt(max(self.l2_inner(ahat, ahat), 0.0))

    def h34_seminorm(self, ahat: np.ndarray) -> float:
        return np.sqrt(max(self.h34dot_inner(ahat, ahat), 0.0))

    def h34_norm(self, ahat: np.ndarray, ell: float) -> float:
        return np.sqrt(max(self.h34_inner(ahat, ahat, ell), 0.0))

    # ------------------------------------------------------------------
    # structural checks
    # ------------------------------------------------------------------

    def divergence_residual(self, vhat: np.ndarray) -> float:
        """Relative size of the divergence of a 3-component field."""
        div = self.divergence_of(vhat)
        num = np.sqrt(np.sum(self.parseval_weight * np.abs(div) ** 2))
        den = np.sqrt(np.sum(self.parseval_weight * self.k_sq * np.abs(vhat) ** 2))
        if den == 0.0:
            return 0.0
        return float(num / (2.0 * np.pi * den))

    def mean_mode(self, vhat: np.ndarray) -> np.ndarray:
        return vhat[..., 0, 0, 0]


def zero_vector_field(grid: SpectralGrid) -> np.ndarray:
    """All-zero 3-component spectral field."""
    return np.zeros((3,) + grid.shape_spec, dtype=np.complex128)


def random_solenoidal_field(
    grid: SpectralGrid,
    rng: np.random.Generator,
    k_max: float = 4.0,
    decay: float = 1.0,
    l2_amplitude: float = 1.0,
) -> np.ndarray:
    """Random smooth divergence-free zero-mean field.

    Coefficients are drawn as complex Gaussians on modes |k| <= k_max with an
    exp(-decay*|k|) envelope, symmetrized through a physical-space round trip,
    projected, and rescaled to the requested L2 norm.
    """
    shape = (3,) + grid.shape_spec
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    envelope = np.where(grid.k_mag <= k_max, np.exp(-decay * grid.k_mag), 0.0)
    raw *= envelope
    # round trip enforces the Hermitian symmetry of the half-spectrum storage
    uhat = grid.to_spectral(grid.to_physical(raw))
    uhat = grid.leray_project(uhat)
    norm = grid.l2_norm(uhat)
    if norm == 0.0:
        raise ValueError("degenerate random draw produced a zero field")
    return uhat * (l2_amplitude / norm)
