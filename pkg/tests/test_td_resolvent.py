import numpy as np
import pytest

from tdstab.grid import build_grid, op_U
from tdstab.shearflow import InvalidModeError, ShearFlow
from tdstab.td_resolvent import (DATA_FAMILIES, Mode, OutOfRegionError, assemble,
                                 direct_solve, h_norm, neumann_trace, pieces, ray_mode,
                                 relative_h_difference, series_partial_sums, xi0)

FLOW = ShearFlow.from_name("ExpConcave")


@pytest.fixture(scope="module")
def grid():
    return build_grid(N=256)


@pytest.fixture(scope="module")
def data(grid):
    w = DATA_FAMILIES["gaussian"](grid)
    return w, complex(op_U(grid, w))


def test_mode_case_tag():
    assert Mode(8, 4 + 0j).case == 1
    assert Mode(8, 4 - 64j).case == 2
    with pytest.raises(InvalidModeError):
        Mode(0, 1.0)


def test_xi0_has_unit_mean(grid):
    m = ray_mode(16, 1.0, 100.0)
    assert op_U(grid, xi0(m, grid)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k,mult", [(8, 0), (16, -1), (32, 4), (-16, 1)])
def test_iterative_matches_direct(grid, data, k, mult):
    m = ray_mode(k, 1.0, mult * k * k)
    it = assemble(FLOW, grid, m, *data)
    dr = direct_solve(FLOW, grid, m, *data)
    assert relative_h_difference(grid, it, dr) < 1e-8


def test_mean_condition_of_bar_profile(grid):
    sol = assemble(FLOW, grid, ray_mode(16, 1.0), np.zeros(grid.size))
    assert sol.diagnostics["mean_residual_bar"] < 1e-10
    assert op_U(grid, sol.omega) == pytest.approx(sol.A, abs=1e-12)


def test_neumann_form_on_compatible_data(grid, data):
    k = 32.0
    sol = direct_solve(FLOW, grid, ray_mode(k, 1.0, -k * k), *data)
    lhs = neumann_trace(grid, sol)
    scale = k * k * abs(sol.A) + grid.l2_norm(sol.omega)
    assert abs(lhs - 1j * k * abs(k) * sol.A) <= 1e-5 * scale


def test_zero_data_gives_zero(grid):
    m = ray_mode(16, 1.0)
    sol = direct_solve(FLOW, grid, m, np.zeros(grid.size), 0.0)
    assert np.all(sol.omega == 0) and sol.A == 0
    assert assemble(FLOW, grid, m).A == 0


def test_linearity(grid, data):
    m = ray_mode(16, 1.0, 50.0)
    w, A = data
    w2 = DATA_FAMILIES["algebraic"](grid)
    s1 = assemble(FLOW, grid, m, w, A)
    s2 = assemble(FLOW, grid, m, w2, 0.3)
    s3 = assemble(FLOW, grid, m, 2 * w - 1j * w2, 2 * A - 0.3j)
    assert np.allclose(s3.omega, 2 * s1.omega - 1j * s2.omega, atol=1e-12)


def test_series_partial_sums_converge(grid):
    m = ray_mode(16, 1.0)
    p = pieces(FLOW, grid, m)
    sums = series_partial_sums(grid, m, p, 40)
    err = [h_norm(grid, s - p.omega_bar, 0) for s in sums]
    assert err[-1] < 1e-10 * h_norm(grid, p.omega_bar, 0)
    assert all(b <= a * 0.6 for a, b in zip(err[:10], err[1:11]))


def test_out_of_region(grid):
    with pytest.raises(OutOfRegionError):
        assemble(FLOW, grid, Mode(16, -1.0 + 0j))
    with pytest.raises(ValueError):
        assemble(FLOW, build_grid("UnitInterval", N=32), ray_mode(16, 1.0))
