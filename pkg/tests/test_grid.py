import math

import numpy as np
import pytest

from src.errors import GridError, GridMismatchError, TruncationError
from src.grid import (PeriodicGrid, RadialField, RadialGrid, VectorField, bilaplacian_symbol, grid_hash,
                      radial_bilaplacian, radial_integral, rescale_field)


@pytest.mark.parametrize("N, expected", [(4, math.pi ** 2), (5, math.pi ** 2.5)])
def test_gaussian_quadrature(N, expected):
    g = RadialGrid(N, 10.0, 2000)
    assert radial_integral(g, np.exp(-g.r ** 2)) == pytest.approx(expected, rel=1e-6)


def test_weighted_laplacian_is_symmetric():
    g = RadialGrid(5, 4.0, 40)
    wl = np.diag(g.weights) @ g.laplacian_matrix.toarray()
    np.testing.assert_allclose(wl, wl.T, rtol=1e-12, atol=1e-12 * np.abs(wl).max())


def test_bilaplacian_of_quartic_is_constant():
    g = RadialGrid(4, 10.0, 1000)
    out = radial_bilaplacian(g, g.r ** 4).values[0]
    mask = (g.r >= 1.0) & (g.r <= 5.0)
    np.testing.assert_allclose(out[mask], 192.0, rtol=1e-4)


def test_bilaplacian_of_gaussian():
    N = 5
    g = RadialGrid(N, 12.0, 4800)
    r = g.r
    exact = (2 * N - 4 * r ** 2 + (r ** 2 - N) ** 2) * np.exp(-r ** 2 / 2)
    out = radial_bilaplacian(g, np.exp(-r ** 2 / 2)).values[0]
    mask = (r >= 1.0) & (r <= 4.0)
    np.testing.assert_allclose(out[mask], exact[mask], atol=1e-2)


def test_dilation_norm_identity():
    N = 5
    g = RadialGrid(N, 12.0, 2400)
    f = RadialField(g, np.exp(-g.r ** 2 / 2))
    base = f.norms_sq()[0]
    exact = rescale_field(f, 1.0, 2.0, mode="dilate").norms_sq()[0]
    spline = rescale_field(f, 1.0, 2.0).norms_sq()[0]
    assert exact == pytest.approx(2.0 ** -N * base, rel=1e-12)
    assert spline == pytest.approx(2.0 ** -N * base, rel=1e-6)


def test_dilation_that_loses_mass_raises():
    g = RadialGrid(4, 10.0, 500)
    f = RadialField(g, np.exp(-g.r ** 2 / 18))
    with pytest.raises(TruncationError) as err:
        rescale_field(f, 1.0, 0.3)
    assert err.value.lost_fraction > 0.01


def test_periodic_laplacian_of_cosine():
    g = PeriodicGrid(1, 32, math.pi)
    values = np.cos(3 * g.x)
    np.testing.assert_allclose(g.laplacian(values), -9.0 * values, atol=1e-12)


def test_bilaplacian_symbol_on_cosines():
    line = PeriodicGrid(1, 32, math.pi)
    wave = np.cos(3 * line.x)
    np.testing.assert_allclose(line.apply_symbol(wave, bilaplacian_symbol(line)), 81.0 * wave, atol=1e-10)
    plane = PeriodicGrid(2, 32, math.pi)
    wave = np.cos(2 * plane.x)[:, None] * np.cos(plane.x)[None, :]
    np.testing.assert_allclose(plane.apply_symbol(wave, bilaplacian_symbol(plane)), 25.0 * wave, atol=1e-10)


@pytest.mark.parametrize("n", [7, 14, 2, 24, 12])
def test_periodic_grid_needs_power_of_two_sizes(n):
    with pytest.raises(GridError):
        PeriodicGrid(2, n, 5.0)


def test_periodic_grid_accepts_powers_of_two():
    assert PeriodicGrid(1, 4, 5.0).shape == (4,)
    assert PeriodicGrid(3, 32, 5.0).shape == (32, 32, 32)


def test_fields_check_their_grid():
    g = RadialGrid(5, 4.0, 40)
    with pytest.raises(GridMismatchError):
        RadialField(g, np.zeros(39))
    with pytest.raises(GridError):
        RadialField(g, np.full(40, np.nan))
    with pytest.raises(GridMismatchError):
        RadialField(PeriodicGrid(1, 16, 1.0), np.zeros(16))
    f = VectorField(g, np.ones(40))
    assert f.m == 1 and not f.values.flags.writeable


def test_grid_hash_depends_on_every_parameter():
    assert grid_hash(RadialGrid(5, 16.0, 100)) != grid_hash(RadialGrid(5, 16.0, 101))
    assert grid_hash(RadialGrid(5, 16.0, 100)) == grid_hash(RadialGrid(5, 16.0, 100))
