import numpy as np
import pytest

from tdstab.grid import (ConfigurationError, build_grid, chebdif, hns_U, op_Phi,
                         op_Phi_collocation, op_U, op_V, op_Vy, op_Vy_minus, op_Uy)
from tdstab.shearflow import Domain


@pytest.fixture(scope="module")
def grid():
    return build_grid(N=256)


@pytest.fixture(scope="module")
def channel():
    return build_grid(Domain.UNIT_INTERVAL, N=64)


def test_chebdif_differentiates_polynomials():
    x, DM = chebdif(16, 2)
    assert np.allclose(DM[0] @ x**3, 3 * x**2)
    assert np.allclose(DM[1] @ x**3, 6 * x)


def test_nodes_and_quadrature(grid):
    y = grid.nodes
    assert y[0] == 0.0 and y[-1] == 40.0
    assert np.all(np.diff(y) > 0)
    assert grid.integrate(np.ones_like(y)) == pytest.approx(40.0, rel=1e-14)
    assert grid.integrate(np.exp(-y)) == pytest.approx(1 - np.exp(-40.0), rel=1e-13)


def test_mapped_derivatives(grid):
    y = grid.nodes
    assert np.abs(grid.D1 @ y - 1).max() < 1e-10
    assert np.abs(grid.D1 @ np.exp(-y) + np.exp(-y)).max() < 1e-9


def test_integral_operators_on_exponential(grid):
    y = grid.nodes
    f = np.exp(-y)
    eY = np.exp(-40.0)
    assert np.allclose(op_Uy(grid, f), np.exp(-y) - eY, atol=1e-14)
    assert np.allclose(op_Vy(grid, f), -(1 - np.exp(-y)) + y * eY, atol=1e-13)
    assert op_V(grid, f) == pytest.approx(-1.0, abs=1e-13)
    assert op_U(grid, f) == pytest.approx(1.0, abs=1e-13)
    # V[f] = -int y f
    assert op_V(grid, f) == pytest.approx(-grid.integrate(y * f), abs=1e-13)
    assert np.allclose(op_Vy_minus(grid, f), op_Uy(grid, op_Uy(grid, f)))


def test_stream_function_examples(channel):
    y = channel.nodes
    one = np.ones_like(y)
    assert np.allclose(op_Phi(channel, one), 0.5 * y * (y - 1), atol=1e-15)
    assert np.allclose(hns_U(channel, one), [-0.5, 0.5])
    f = np.sin(np.pi * y)
    exact = -np.sin(np.pi * y) / np.pi**2
    assert np.allclose(op_Phi(channel, f), exact, atol=1e-14)
    assert np.allclose(op_Phi_collocation(channel, f), exact, atol=1e-12)


def test_phi_needs_channel(grid):
    with pytest.raises(ConfigurationError):
        op_Phi(grid, grid.nodes)


@pytest.mark.parametrize("kwargs", [{"N": 8}, {"Y_max": 10.0}, {"stretch": 0.0}])
def test_bad_parameters(kwargs):
    with pytest.raises(ConfigurationError):
        build_grid(**kwargs)


def test_l2_and_inner(grid):
    y = grid.nodes
    f = np.exp(-y) * (1 + 1j)
    assert grid.l2_norm(f) ** 2 == pytest.approx(1.0, rel=1e-12)
    assert grid.inner(f, f) == pytest.approx(1.0, rel=1e-12)
