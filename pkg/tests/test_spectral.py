import numpy as np
import pytest

from nsmax.spectral import SpectralGrid, random_solenoidal_field, zero_vector_field

from conftest import shear_field, single_mode_scalar


def test_grid_rejects_odd_or_nonpositive_sizes():
    for bad in (0, -4, 15):
        with pytest.raises(ValueError):
            SpectralGrid(bad)


def test_zero_field_round_trip(grid16):
    fhat = np.zeros(grid16.shape_spec, dtype=np.complex128)
    assert np.all(grid16.to_physical(fhat) == 0.0)


def test_single_mode_has_half_amplitude_coefficients(grid16):
    fhat = single_mode_scalar(grid16, (1, 0, 0))
    # cos(2 pi x1) = (e^{2 pi i x1} + e^{-2 pi i x1}) / 2; both modes stored
    assert abs(fhat[1, 0, 0] - 0.5) < 1e-14
    assert abs(fhat[-1, 0, 0] - 0.5) < 1e-14
    fhat[1, 0, 0] = 0.0
    fhat[-1, 0, 0] = 0.0
    assert np.abs(fhat).max() < 1e-14


def test_round_trip_reproduces_samples(grid16):
    rng = np.random.default_rng(0)
    f = rng.standard_normal(grid16.shape_phys)
    back = grid16.to_physical(grid16.to_spectral(f))
    assert np.abs(back - f).max() < 1e-12 * np.abs(f).max()


def test_transform_shape_mismatch_raises(grid16, grid32):
    fhat = np.zeros(grid16.shape_spec, dtype=np.complex128)
    with pytest.raises(ValueError):
        grid32.to_physical(fhat)
    with pytest.raises(ValueError):
        grid16.to_spectral(np.zeros(grid32.shape_phys))


def test_parseval_against_direct_summation(grid16):
    # oracle: plain collocation sum of |f|^2 in physical space
    rng = np.random.default_rng(1)
    f = rng.standard_normal(grid16.shape_phys)
    fhat = grid16.to_spectral(f)
    physical = float(np.mean(f * f))
    spectral = float(np.sum(grid16.parseval_weight * np.abs(fhat) ** 2))
    assert abs(physical - spectral) < 1e-12 * physical


def test_gradient_of_single_sine(grid16):
    x, y, z = grid16.collocation_points()
    fhat = grid16.to_spectral(np.sin(2 * np.pi * y))
    grad = grid16.to_physical(grid16.gradient_of(fhat))
    assert np.abs(grad[0]).max() < 1e-12
    assert np.abs(grad[2]).max() < 1e-12
    assert np.abs(grad[1] - 2 * np.pi * np.cos(2 * np.pi * y)).max() < 1e-11


def test_gradient_of_constant_is_zero(grid16):
    fhat = grid16.to_spectral(np.full(grid16.shape_phys, 3.7))
    assert np.abs(grid16.gradient_of(fhat)).max() < 1e-14


def test_gradient_matches_analytic_partials(grid16):
    # f = sin(2 pi x1) sin(4 pi x3); partials written out independently
    x, y, z = grid16.collocation_points()
    f = np.sin(2 * np.pi * x) * np.sin(4 * np.pi * z)
    d1 = 2 * np.pi * np.cos(2 * np.pi * x) * np.sin(4 * np.pi * z)
    d3 = 4 * np.pi * np.sin(2 * np.pi * x) * np.cos(4 * np.pi * z)
    grad = grid16.to_physical(grid16.gradient_of(grid16.to_spectral(f)))
    scale = np.abs(d3).max()
    assert np.abs(grad[0] - d1).max() < 1e-12 * scale
    assert np.abs(grad[1]).max() < 1e-12 * scale
    assert np.abs(grad[2] - d3).max() < 1e-12 * scale


def test_fractional_laplacian_single_mode(grid16):
    # mode k=(0,3,4) has |k| = 5; order 3/2 scales it by 5^{3/2}
    fhat = single_mode_scalar(grid16, (0, 3, 4))
    out = grid16.fractional_laplacian(fhat, 1.5)
    ratio = out[0, 3, 4] / fhat[0, 3, 4]
    assert abs(ratio - 5.0**1.5) < 1e-12 * 5.0**1.5
    assert abs(ratio - 11.180339887498949) < 1e-10


def test_fractional_laplacian_zero_order_is_identity(grid16):
    rng = np.random.default_rng(2)
    fhat = grid16.to_spectral(rng.standard_normal(grid16.shape_phys))
    assert np.array_equal(grid16.fractional_laplacian(fhat, 0.0), fhat)


def test_fractional_laplacian_integer_lattice_eigenvalue(grid16):
    # s=2 on sin(2 pi x1): the lattice operator uses |k|^2 = 1, not (2 pi)^2
    x, _, _ = grid16.collocation_points()
    fhat = grid16.to_spectral(np.sin(2 * np.pi * x))
    out = grid16.fractional_laplacian(fhat, 2.0)
    assert np.abs(out - fhat).max() < 1e-14


def test_fractional_laplacian_composition(grid16):
    rng = np.random.default_rng(3)
    fhat = grid16.to_spectral(rng.standard_normal(grid16.shape_phys))
    fhat[0, 0, 0] = 0.0
    composed = grid16.fractional_laplacian(grid16.fractional_laplacian(fhat, 0.75), 0.5)
    direct = grid16.fractional_laplacian(fhat, 1.25)
    assert np.abs(composed - direct).max() < 1e-12 * np.abs(direct).max()


def test_fractional_laplacian_negative_order_mean_raises(grid16):
    fhat = np.zeros(grid16.shape_spec, dtype=np.complex128)
    fhat[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        grid16.fractional_laplacian(fhat, -0.5)


def test_leray_annihilates_pure_gradients(grid16):
    x, _, _ = grid16.collocation_points()
    phi_hat = grid16.to_spectral(np.sin(2 * np.pi * x))
    vhat = grid16.gradient_of(phi_hat)
    assert grid16.l2_norm(grid16.leray_project(vhat)) < 1e-14


def test_leray_keeps_solenoidal_mode(grid16):
    # u = (0, cos(2 pi x1), 0): single mode with u-hat orthogonal to k
    x, _, _ = grid16.collocation_points()
    u = np.stack([np.zeros_like(x), np.cos(2 * np.pi * x), np.zeros_like(x)])
    uhat = grid16.to_spectral(u)
    assert np.abs(grid16.leray_project(uhat) - uhat).max() < 1e-14


def test_leray_output_divergence_free_and_idempotent(grid16):
    rng = np.random.default_rng(4)
    vhat = grid16.to_spectral(rng.standard_normal((3,) + grid16.shape_phys))
    proj = grid16.leray_project(vhat)
    kdotv = grid16.kx * proj[0] + grid16.ky * proj[1] + grid16.kz * proj[2]
    assert np.abs(kdotv).max() < 1e-12 * np.abs(vhat).max()
    again = grid16.leray_project(proj)
    assert np.abs(again - proj).max() < 1e-12 * np.abs(proj).max()
    assert np.abs(proj[:, 0, 0, 0]).max() == 0.0


def test_leray_is_self_adjoint(grid16):
    rng = np.random.default_rng(5)
    a = grid16.to_spectral(rng.standard_normal((3,) + grid16.shape_phys))
    b = grid16.to_spectral(rng.standard_normal((3,) + grid16.shape_phys))
    lhs = grid16.l2_inner(grid16.leray_project(a), b)
    rhs = grid16.l2_inner(a, grid16.leray_project(b))
    assert abs(lhs - rhs) < 1e-12 * max(abs(lhs), 1.0)


def test_dealias_multiplier_values(grid32):
    m = grid32.dealias_multiplier
    assert m[0, 0, 0] == 1.0
    # |k|_inf = n/2 = 16: attenuated to e^{-36}
    assert abs(m[16, 0, 0] - np.exp(-36.0)) < 1e-30
    assert m[16, 0, 0] < 1e-15
    # |k|_inf = n/4 = 8: multiplier exp(-36 * 2^-36), within 1e-9 of unity
    expected = np.exp(-36.0 * 2.0**-36)
    assert abs(m[8, 0, 0] - expected) < 1e-15
    assert abs(m[8, 0, 0] - 1.0) < 1e-9


def test_dealias_commutes_with_leray(grid16):
    rng = np.random.default_rng(6)
    vhat = grid16.to_spectral(rng.standard_normal((3,) + grid16.shape_phys))
    a = grid16.dealias(grid16.leray_project(vhat))
    b = grid16.leray_project(grid16.dealias(vhat))
    assert np.abs(a - b).max() < 1e-14 * np.abs(vhat).max()


def test_l2_inner_of_shear_mode(grid16):
    amp = 1.3
    uhat = shear_field(grid16, amp)
    # integral of A^2 sin^2 = A^2 / 2
    assert abs(grid16.l2_inner(uhat, uhat) - amp**2 / 2) < 1e-12


def test_inner_product_with_zero_field(grid16):
    uhat = shear_field(grid16)
    assert grid16.l2_inner(uhat, zero_vector_field(grid16)) == 0.0


def test_h34dot_orthogonality_of_distinct_modes(grid16):
    a = np.zeros((3,) + grid16.shape_spec, dtype=np.complex128)
    b = np.zeros((3,) + grid16.shape_spec, dtype=np.complex128)
    a[0] = single_mode_scalar(grid16, (0, 1, 0))
    b[0] = single_mode_scalar(grid16, (0, 0, 2))
    assert grid16.h34dot_inner(a, b) == 0.0


def test_h34_inner_is_l2_plus_weighted_seminorm(grid16):
    rng = np.random.default_rng(7)
    a = grid16.to_spectral(rng.standard_normal((3,) + grid16.shape_phys))
    b = grid16.to_spectral(rng.standard_normal((3,) + grid16.shape_phys))
    ell = 2.0
    combined = grid16.l2_inner(a, b) + ell**1.5 * grid16.h34dot_inner(a, b)
    assert abs(grid16.h34_inner(a, b, ell) - combined) < 1e-12 * abs(combined)


def test_inner_product_grid_mismatch(grid16, grid32):
    a = zero_vector_field(grid16)
    b = zero_vector_field(grid32)
    with pytest.raises(ValueError):
        grid16.l2_inner(a, b)


def test_random_solenoidal_field_properties(grid16):
    rng = np.random.default_rng(8)
    uhat = random_solenoidal_field(grid16, rng, k_max=4.0, l2_amplitude=2.5)
    assert abs(grid16.l2_norm(uhat) - 2.5) < 1e-12
    assert grid16.divergence_residual(uhat) < 1e-13
    assert np.abs(uhat[:, 0, 0, 0]).max() == 0.0
    # band limited to |k| <= 4, up to round-trip roundoff
    outside = np.abs(uhat) * (grid16.k_mag > 4.0)
    assert outside.max() < 1e-14 * np.abs(uhat).max()
