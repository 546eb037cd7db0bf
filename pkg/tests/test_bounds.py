from math import comb, factorial

import numpy as np
import pytest

from tdstab import bounds as B
from tdstab.grid import ConfigurationError, build_grid, op_V
from tdstab.shearflow import ShearFlow
from tdstab.td_resolvent import DATA_FAMILIES, ray_mode, xi0

FLOW = ShearFlow.from_name("ExpConcave")


@pytest.fixture(scope="module")
def grid():
    return build_grid(N=256)


@pytest.fixture(scope="module")
def record(grid):
    return B.td_record(FLOW, grid, ray_mode(32, 1.0, -1024.0), DATA_FAMILIES["gaussian"](grid))


def test_norm_H(grid):
    z = np.zeros(grid.size)
    assert B.norm_H(grid, z, 0) == 0
    assert B.norm_H(grid, z, 3 - 4j) == pytest.approx(5.0)
    # int (1+y)^6 e^{-2y} = sum_j C(6, j) j! / 2^{j+1}
    exact = sum(comb(6, j) * factorial(j) / 2 ** (j + 1) for j in range(7))
    assert B.norm_H(grid, np.exp(-grid.nodes), 0) == pytest.approx(np.sqrt(exact), rel=1e-12)


def test_norm_weighted_converges_and_sandwich(grid):
    fine = build_grid(N=1024)
    coarse = B.norm_weighted(grid, FLOW, 8, np.exp(-grid.nodes))
    ref = B.norm_weighted(fine, FLOW, 8, np.exp(-fine.nodes))
    assert abs(coarse - ref) <= 1e-8 * ref
    assert B.norm_weighted(grid, FLOW, 8, np.zeros(grid.size)) == 0
    low, high = B.sandwich_constants(grid, FLOW, 8, np.exp(-grid.nodes))
    assert low < 10 and high < 10


def test_boundary_layer_displacement_closed_form(grid):
    m = ray_mode(16, 1.0, 300.0)
    # V[xi0] = -int y s e^{-s y} = -1/s
    assert op_V(grid, xi0(m, grid)) == pytest.approx(-1 / m.sqrt_lam, rel=1e-12)


def test_interpolation_constant(grid, record):
    for f in (record.pieces.Xi0, record.pieces.Omega_BL, record.pieces.F_H,
              record.pieces.omega_H0, np.exp(-grid.nodes)):
        assert B.interpolation_constant(grid, f) <= 2.0


def test_cancellations(grid, record):
    z = np.zeros(grid.size)
    assert B.check_cancellations(grid, 8, 1.0, z) == (0.0, 0.0)
    real = np.exp(-grid.nodes) * grid.nodes
    r1, r2 = B.check_cancellations(grid, 8, 0.7, real)
    assert r1 == 0.0 and r2 == 0.0
    f = record.solution.A * record.pieces.omega_H0
    r1, r2 = B.check_cancellations(grid, 32, record.solution.A, f)
    assert r1 < 1e-10 and r2 < 1e-10


def test_energy_identity(record):
    assert B.energy_identity_residual(record) < 1e-8
    # the opposite sign on the weight term does not balance
    assert B.energy_identity_residual(record, flipped=True) > 1e-6
    lhs, rhs = B.energy_terms(record)
    assert all(v >= 0 for v in lhs.values())


def test_zero_solution_energy(grid):
    rec = B.td_record(FLOW, grid, ray_mode(16, 1.0), np.zeros(grid.size))
    assert B.energy_identity_residual(rec) == 0.0


def test_check_inequality_fields(record):
    rep = B.check_inequality("s:b", record)
    assert rep.rhs > 0 and rep.constant == pytest.approx(rep.lhs / rep.rhs)
    assert rep.case == 2
    assert B.check_inequality("mainapriori", record).id == "mainapriori:F_H"
    with pytest.raises(ConfigurationError):
        B.check_inequality("no:such:id", record)


def test_not_applicable_for_zero_data(grid):
    rec = B.td_record(FLOW, grid, ray_mode(16, 1.0), np.zeros(grid.size))
    with pytest.raises(B.NotApplicable):
        B.check_inequality("s:e", rec)
    ids = [r.id for r in B.check_all(rec, ["s:a", "s:e"])]
    assert ids == ["s:a"]


def test_apply_ceilings():
    reps = [B.BoundReport("x", 8, 1 + 0j, 1, c, 1.0, c) for c in (1.0, 2.0, 3.0, 30.0)]
    summary = B.apply_ceilings(reps, factor=10.0)
    assert summary["x"]["median"] == 2.5
    assert [r.passed for r in reps] == [True, True, True, False]
    assert not summary["x"]["passed"]


def test_operator_norm_bounds_single_datum(grid, record):
    op = B.td_operator_norm(FLOW, grid, record.mode)
    sol = record.solution
    data = DATA_FAMILIES["gaussian"](grid)
    data[[0, -1]] = 0.0
    ratio = B.norm_H(grid, sol.omega, sol.A) / B.norm_H(grid, data, record.A_init)
    assert ratio <= op * (1 + 1e-6)


def test_hns_operator_norm_bounds_datum():
    from tdstab.hns_resolvent import hns_data
    g = build_grid("UnitInterval", N=96)
    flow = ShearFlow.from_name("ChannelConcave")
    rec = B.hns_record(flow, g, ray_mode(16, 4.0), hns_data(g))
    op = B.hns_operator_norm(flow, g, rec.mode)
    assert g.l2_norm(rec.solution.omega) <= op * g.l2_norm(rec.omega_init) * (1 + 1e-6)
    assert B.check_inequality("pro:main2HNS", rec).constant > 0
