"""Acceptance criteria, each at its stated tolerance.

Every test logs a single PASS/FAIL line (collected again in the terminal
summary) and then asserts the same condition.
"""

import filecmp
import os
import time

import numpy as np
import pytest

from tdstab import bounds as B
from tdstab.cli import main as cli_main
from tdstab.evolve import contour_semigroup, fit_gevrey, max_stable_dt, step_mode
from tdstab.grid import build_grid, op_U
from tdstab.hns_resolvent import hns_assemble, hns_data, hns_direct_solve, phi0_coefficients
from tdstab.shearflow import ShearFlow
from tdstab.td_resolvent import (DATA_FAMILIES, assemble, direct_solve, omega_BL, ray_mode,
                                 relative_h_difference)

EXP = ShearFlow.from_name("ExpConcave")
CHANNEL = ShearFlow.from_name("ChannelConcave")
KS = [8, 16, 32, 64, 128]
MULTS = [0, 1, -1, 4, -4]
K_STAR, K_STAR_HNS = 1.0, 4.0


def sweep_modes(K_star):
    return [ray_mode(k, K_star, m * k * k) for k in KS for m in MULTS]


def spread(values):
    v = np.asarray(values)
    return float(v.max() / v.min())


@pytest.fixture(scope="module")
def td_sweep():
    """Iterative and direct solves over the sweep at N = 512, Y_max = 40."""
    t0 = time.perf_counter()
    g = build_grid(N=512, Y_max=40.0)
    w = DATA_FAMILIES["gaussian"](g)
    A = complex(op_U(g, w))
    out = []
    for m in sweep_modes(K_STAR):
        rec = B.td_record(EXP, g, m, w, A)
        out.append((m, rec, direct_solve(EXP, g, m, w, A)))
    return g, out, time.perf_counter() - t0


def test_criterion_1_oracle_equivalence(td_sweep, criterion):
    g, out, elapsed = td_sweep
    diffs = [relative_h_difference(g, rec.solution, dr) for _, rec, dr in out]
    ok = max(diffs) <= 1e-6 and elapsed < 120
    assert criterion(1, "Triple-Deck iterative vs direct", ok,
                     f"max rel H diff {max(diffs):.2e} (tol 1e-6) over {len(out)} modes, "
                     f"{elapsed:.1f} s (limit 120 s)")


def test_criterion_2_series_ratios(td_sweep, criterion):
    g, out, _ = td_sweep
    a0 = np.array([abs(rec.pieces.alpha0) for _, rec, _ in out])
    ratio = np.array([abs(rec.pieces.ratio) for _, rec, _ in out])
    C = max(abs(rec.pieces.alpha0) * abs(m.lam) ** 1.5 / abs(m.k) for m, rec, _ in out)
    g2 = build_grid(N=1024)
    C2 = max(abs(omega_BL(EXP, g2, m)[1]) * abs(m.lam) ** 1.5 / abs(m.k)
             for m in sweep_modes(K_STAR))
    drift = abs(C2 - C) / C
    ok = a0.max() < 1 and ratio.max() <= 0.5 and drift < 0.05
    assert criterion(2, "series ratios", ok,
                     f"max|alpha0| {a0.max():.3f} (<1), max|ikU[F_H]| {ratio.max():.3f} (<=1/2), "
                     f"C(alpha0) {C:.4f} -> {C2:.4f} on doubling, drift {drift:.1e} (<5%)")


def test_criterion_3_resolvent_bound(criterion):
    consts = {}
    for N in (256, 512):
        g = build_grid(N=N)
        consts[N] = [B.td_operator_norm(EXP, g, m) / (abs(m.k) ** (1 / 3) * abs(m.lam) ** 0.25)
                     for m in sweep_modes(K_STAR)]
    c256, c512 = np.array(consts[256]), np.array(consts[512])
    drift = abs(c512.max() - c256.max()) / c512.max()
    g = build_grid(N=512)
    w = DATA_FAMILIES["gaussian"](g)
    A = op_U(g, w)
    datum = []
    for m in sweep_modes(K_STAR):
        s = assemble(EXP, g, m, w, A)
        datum.append(B.norm_H(g, s.omega, s.A) /
                     (abs(m.k) ** (1 / 3) * abs(m.lam) ** 0.25 * B.norm_H(g, w, A)))
    ok = spread(c512) < 3 and drift < 0.05
    assert criterion(3, "resolvent bound constant", ok,
                     f"operator-norm C in [{c512.min():.2e}, {c512.max():.2e}], spread "
                     f"x{spread(c512):.0f} (limit x3), doubling drift {drift:.1e} (<5%); "
                     f"gaussian-datum C spread x{spread(datum):.0f}")


def test_criterion_4_structural_bounds(td_sweep, criterion):
    _, out, _ = td_sweep
    reports = [B.check_inequality(i, rec) for _, rec, _ in out
               for i in ("s:a", "s:b", "s:c", "s:d", "s:e")]
    summary = B.apply_ceilings(reports, factor=10.0)
    failing = [i for i, s in summary.items() if not s["passed"]]
    detail = "; ".join(f"{i} median {s['median']:.2e} max {s['max']:.2e}"
                       for i, s in summary.items())
    assert criterion(4, "s:a-s:e within 10x median ceiling", not failing,
                     f"above ceiling: {failing or 'none'}; {detail}")


def _measured_order(Ns, res, floor):
    """Convergence order from the leading residuals above the roundoff floor.

    Returns None when every residual is already at the floor, and -inf when
    a residual climbs back above the floor after reaching it.
    """
    Ns, res = np.asarray(Ns, float), np.asarray(res, float)
    above = res > floor
    lead = int(np.argmin(above)) if not above.all() else len(res)
    if above[lead:].any():
        return -np.inf
    if lead == 0:
        return None
    if lead == 1:
        # one point above the floor: the drop into the floor bounds the order
        return float(np.log(res[0] / res[1]) / np.log(Ns[1] / Ns[0]))
    return float(-np.polyfit(np.log(Ns[:lead]), np.log(res[:lead]), 1)[0])


def test_criterion_5_cancellations(criterion):
    Ns = [128, 256, 512, 1024]
    floor = 100 * np.finfo(float).eps
    k = 32
    rows = {m: [] for m in MULTS}
    for N in Ns:
        g = build_grid(N=N)
        w = DATA_FAMILIES["gaussian"](g)
        for m in MULTS:
            rec = B.td_record(EXP, g, ray_mode(k, K_STAR, m * k * k), w)
            rows[m].append(B.check_cancellations(g, k, rec.solution.A,
                                                 rec.solution.A * rec.pieces.omega_H0))
    ok, parts = True, []
    for m, res in rows.items():
        for j, name in enumerate(("cancel1", "hydro")):
            r = [x[j] for x in res]
            p = _measured_order(Ns, r, floor)
            good = p is None or p >= 2
            ok &= good
            label = "at roundoff" if p is None else f"order {p:.1f}"
            parts.append(f"Im={m}k^2 {name}: {r[0]:.1e}->{r[-1]:.1e} {label}")
    assert criterion(5, "cancellation identities", ok,
                     f"floor {floor:.1e}; " + "; ".join(parts))


def test_criterion_6_neumann(td_sweep, criterion):
    g, out, _ = td_sweep
    worst = 0.0
    for m, _, dr in out:
        k = m.k
        lhs = abs(g.D1[0] @ dr.omega - 1j * k * abs(k) * dr.A)
        worst = max(worst, lhs / (k * k * abs(dr.A) + g.l2_norm(dr.omega)))
    assert criterion(6, "Neumann equivalence", worst <= 1e-5,
                     f"max normalized residual {worst:.2e} (tol 1e-5)")


def test_criterion_7_semigroup(criterion):
    g = build_grid(N=256)
    w = DATA_FAMILIES["gaussian"](g)
    A = complex(op_U(g, w))
    diffs = {}
    for k, dt in ((16, 2.5e-5), (64, 1.5e-6)):
        c = contour_semigroup(EXP, g, k, w, A, 0.1)
        tr = step_mode(EXP, g, k, w, A, 0.1, dt, record_every=10**9)
        diffs[k] = (B.norm_H(g, tr.omega[-1] - c.omega, tr.A[-1] - c.A)
                    / B.norm_H(g, c.omega, c.A))
    ok = max(diffs.values()) <= 1e-3
    assert criterion(7, "contour vs time stepping at t = 0.1", ok,
                     ", ".join(f"k={k}: {d:.2e}" for k, d in diffs.items()) + " (tol 1e-3)")


def _evolve_fit(flow, ks, N=256, T=1.0):
    g = build_grid(N=N)
    w = DATA_FAMILIES["gaussian"](g)
    A = op_U(g, w)
    trs = []
    for k in ks:
        dt = max_stable_dt(flow, g, k)
        trs.append(step_mode(flow, g, k, w, A, T, dt, record_every=max(1, int(0.01 / dt))))
    return fit_gevrey(trs), trs


def test_criterion_8_gevrey_exponent(criterion):
    fit, trs = _evolve_fit(EXP, [16, 32, 64, 128, 256])
    inflected, _ = _evolve_fit(ShearFlow.from_name("InflectedTest"), [16, 32, 64, 128, 256])
    ok = 0.55 <= fit.p <= 0.80 and not any(t.unstable for t in trs)
    sig = ", ".join(f"{s:.3f}" for s in fit.sigma)
    assert criterion(8, "Gevrey exponent fit", ok,
                     f"p = {fit.p:.3f} (band [0.55, 0.80]), residual {fit.residual:.2e}, "
                     f"sigma(k) = [{sig}]; InflectedTest p = {inflected.p:.3f} (reported only)")


def test_criterion_9_hns(criterion):
    modes = sweep_modes(K_STAR_HNS)
    consts = {}
    for N in (256, 512):
        g = build_grid("UnitInterval", N=N)
        consts[N] = np.array([B.hns_operator_norm(CHANNEL, g, m)
                              / (abs(m.lam) ** 0.25 * abs(m.k) ** (-2 / 3)) for m in modes])
    drift = abs(consts[512].max() - consts[256].max()) / consts[512].max()
    g = build_grid("UnitInterval", N=256)
    w0 = hns_data(g)
    oracle = max(g.l2_norm(hns_assemble(CHANNEL, g, m, w0).omega
                           - hns_direct_solve(CHANNEL, g, m, w0).omega)
                 / g.l2_norm(hns_direct_solve(CHANNEL, g, m, w0).omega) for m in modes)
    worst = {"a": 0.0, "c": 0.0, "d": 0.0}
    for r in (1e3, 1e4, 1e5):
        for th in (0.0, np.pi / 4, -np.pi / 4):
            lam = r * np.exp(1j * th)
            s = np.sqrt(lam)
            co = phi0_coefficients(lam)
            for name, val, lim in (("a", co.a, -1 / s), ("c", co.c, -1 / s),
                                   ("d", co.d, -0.5 / s)):
                worst[name] = max(worst[name], abs(val / lim - 1))
    ok = (spread(consts[512]) < 3 and drift < 0.05 and oracle <= 1e-6
          and max(worst.values()) <= 0.05)
    assert criterion(9, "hydrostatic Navier-Stokes", ok,
                     f"C spread x{spread(consts[512]):.0f} (limit x3), doubling drift "
                     f"{drift:.1e} (<5%); oracle {oracle:.1e} (tol 1e-6); Phi0 max rel err "
                     f"a {worst['a']:.3f}, c {worst['c']:.3f}, d {worst['d']:.1e} (tol 0.05, "
                     f"|lambda| >= 1e3)")


def test_criterion_10_determinism(tmp_path, criterion):
    a, b = tmp_path / "a", tmp_path / "b"
    t0 = time.perf_counter()
    codes = [cli_main(["sweep", "--out", str(d), "--workers", "4"]) for d in (a, b)]
    elapsed = (time.perf_counter() - t0) / 2
    names = sorted(os.listdir(a))
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    ok = not mismatch and not errors and len(match) == len(names) and sorted(os.listdir(b)) == names
    assert criterion(10, "deterministic sweep output", ok,
                     f"{len(match)}/{len(names)} files byte-identical, exit codes {codes}, "
                     f"{elapsed:.1f} s per 20-mode run")
