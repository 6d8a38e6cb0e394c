# -*- coding: utf-8 -*-
import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays

from spectral_core import (
    Grid, RealField, SpectralError, SpectralField,
    l2_inner, l2_norm_squared, reflect, to_real, to_spectral,
)


@pytest.mark.parametrize("n_points, length", [(7, 1.0), (6, 1.0), (16, 0.0), (16, -2.0), (16, np.inf)])
def test_grid_rejects_invalid_sizes(n_points, length):
    with pytest.raises(SpectralError):
        Grid(n_points, length)


def test_grid_wavenumbers_and_weights(periodic_grid):
    g = periodic_grid
    assert g.n_modes == 17
    np.testing.assert_allclose(g.wavenumbers, np.arange(17), atol=1e-12)
    assert g.k_max == pytest.approx(16.0)
    assert g.x[0] == pytest.approx(-np.pi)
    assert g.mode_weights[0] == 1.0 and g.mode_weights[-1] == 1.0
    assert np.all(g.mode_weights[1:-1] == 2.0)
    assert len(g.full_wavenumbers()) == g.n_points


def test_field_shape_is_checked(grid):
    with pytest.raises(SpectralError):
        RealField(grid, np.zeros(grid.n_points + 1))
    with pytest.raises(SpectralError):
        SpectralField(grid, np.zeros(grid.n_points, dtype=complex))


def test_gaussian_matches_continuous_transform():
    g = Grid(128, 40.0)
    u = RealField(g, np.exp(-g.x ** 2))
    expected = np.sqrt(np.pi) * np.exp(-g.wavenumbers ** 2 / 4.0)
    np.testing.assert_allclose(to_spectral(u).coeffs, expected, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 16, elements=st.floats(-1e3, 1e3)))
def test_inverse_transform_recovers_values(values):
    g = Grid(16, 3.0)
    back = to_real(to_spectral(RealField(g, values)))
    np.testing.assert_allclose(back.values, values, atol=1e-9 * (1.0 + np.max(np.abs(values))))


def test_parseval(grid, gaussian):
    F = to_spectral(gaussian)
    assert l2_norm_squared(F) == pytest.approx(np.sum(gaussian.values ** 2) * grid.dx, rel=1e-12)
    G = to_spectral(RealField(grid, np.sin(grid.x) * gaussian.values))
    assert l2_inner(F, G) == pytest.approx(l2_inner(G, F), rel=1e-12)
    assert l2_inner(F, G) == pytest.approx(
        np.sum(gaussian.values * to_real(G).values) * grid.dx, abs=1e-12)


def test_non_finite_input_is_rejected(grid):
    values = np.zeros(grid.n_points)
    values[3] = np.nan
    with pytest.raises(SpectralError):
        to_spectral(RealField(grid, values))


def test_broken_symmetry_is_rejected(grid):
    coeffs = np.zeros(grid.n_modes, dtype=complex)
    coeffs[0] = 1.0 + 0.5j
    with pytest.raises(SpectralError):
        to_real(SpectralField(grid, coeffs))


def test_reflect_matches_grid_reflection(grid):
    values = np.exp(-(grid.x - 3.0) ** 2) + 0.3 * np.sin(2 * np.pi * grid.x / grid.length)
    u = RealField(grid, values)
    mirrored = np.roll(values[::-1], 1)
    np.testing.assert_allclose(to_real(reflect(to_spectral(u))).values, mirrored, atol=1e-12)


def test_full_spectrum_is_hermitian(grid, gaussian):
    F = to_spectral(RealField(grid, gaussian.values * np.cos(grid.x)))
    full = F.full_spectrum()
    k = grid.full_wavenumbers()
    assert full.shape == (grid.n_points,)
    assert np.all(np.diff(k) > 0)
    zero = grid.n_points // 2 - 1
    assert k[zero] == 0.0
    for m in range(1, grid.n_points // 2):
        assert full[zero - m] == pytest.approx(np.conj(full[zero + m]))


def test_cosine_has_a_single_mode():
    g = Grid(64, 2.0 * np.pi)
    F = to_spectral(RealField(g, np.cos(g.x)))
    expected = np.zeros(g.n_modes, dtype=complex)
    expected[1] = np.pi
    np.testing.assert_allclose(F.coeffs, expected, atol=1e-12)
    assert np.all(to_spectral(RealField(g, np.zeros(64))).coeffs == 0)
