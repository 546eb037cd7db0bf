"""Command-line driver: tdstab {check-flow,resolvent,hns,sweep,evolve}.

Exit codes: 0 success, 1 assumption or inequality regression, 2 usage or
configuration error, 3 numerical failure. On a nonzero exit a JSON error
record is printed to stderr and written to ``<out>/error.json`` when the
output directory can be created.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import lru_cache

import numpy as np

from . import bounds as B
from . import config as C
from .evolve import ContourError, fit_gevrey, max_stable_dt, step_mode
from .grid import ConfigurationError, build_grid, op_U
from .hns_resolvent import hns_data, hns_direct_solve, pressure_momentum_check
from .linsolve import SolverError
from .shearflow import Domain, DomainError, InvalidModeError, ShearFlow, check_assumptions
from .td_resolvent import (DATA_FAMILIES, Mode, NearResonanceError, OutOfRegionError,
                           direct_solve, ray_mode, relative_h_difference)

EXIT_OK, EXIT_REGRESSION, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3

NUMERICAL_ERRORS = (SolverError, OutOfRegionError, NearResonanceError, ContourError,
                    ArithmeticError, np.linalg.LinAlgError)
USAGE_ERRORS = (ConfigurationError, DomainError, InvalidModeError)


# ------------------------------------------------------------------ output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


# ------------------------------------------------------------ mode workers


@lru_cache(maxsize=8)
def _grid(domain, N, Y_max, stretch):
    return build_grid(Domain(domain), N, Y_max, stretch)


def _flow(cfg):
    return ShearFlow.from_name(cfg.profile, **cfg.profile_params)


def _td_grid(cfg):
    return _grid(Domain.HALF_LINE.value, cfg.N, cfg.Y_max, cfg.stretch)


def _modes(ks, mults, K_star):
    return [ray_mode(float(k), K_star, m * float(k) ** 2) for k in ks for m in mults]


def _td_data(cfg, grid):
    try:
        return DATA_FAMILIES[cfg.sweep.data](grid)
    except KeyError:
        raise ConfigurationError(f"unknown data family {cfg.sweep.data!r}") from None


def td_mode_task(args):
    """Solve one Triple-Deck mode and evaluate its checks (runs in a worker)."""
    cfg, k, lam, ids = args
    flow = _flow(cfg)
    if flow.domain is not Domain.HALF_LINE:
        raise ConfigurationError(f"{flow.name} is not a half-line profile")
    g = _td_grid(cfg)
    mode = Mode(k, lam)
    w0 = _td_data(cfg, g)
    A_init = None if cfg.sweep.A_init == "compatible" else complex(cfg.sweep.A_init)
    rec = B.td_record(flow, g, mode, w0, A_init, s0=cfg.sweep.s0)
    direct = direct_solve(flow, g, mode, w0, rec.A_init)
    f_H = rec.solution.A * rec.pieces.omega_H0
    c1, c2 = B.check_cancellations(g, k, rec.solution.A, f_H)
    neu = abs(g.D1[0] @ direct.omega - 1j * k * abs(k) * direct.A)
    neu_scale = k * k * abs(direct.A) + g.l2_norm(direct.omega)
    diag = {
        "k": k, "re_lambda": lam.real, "im_lambda": lam.imag, "case": mode.case,
        "alpha0": abs(rec.pieces.alpha0),
        "ratio": abs(rec.pieces.ratio),
        "oracle_difference": relative_h_difference(g, rec.solution, direct),
        "neumann_residual": neu / neu_scale if neu_scale > 0 else neu,
        "energy_residual": B.energy_identity_residual(rec),
        "cancellation_1": c1,
        "cancellation_hydro": c2,
        "condition": direct.condition,
        "mean_residual_bar": rec.solution.diagnostics["mean_residual_bar"],
    }
    reports = [r.row() for r in B.check_all(rec, ids)]
    return diag, reports, rec.solution.omega, rec.solution.A


def hns_mode_task(args):
    cfg, k, lam, ids = args
    flow = ShearFlow.from_name(cfg.hns.profile)
    if flow.domain is not Domain.UNIT_INTERVAL:
        raise ConfigurationError(f"{flow.name} is not a channel profile")
    g = _grid(Domain.UNIT_INTERVAL.value, cfg.hns.N, 1.0, 1.0)
    mode = Mode(k, lam)
    w0 = hns_data(g, cfg.hns.data)
    rec = B.hns_record(flow, g, mode, w0)
    direct = hns_direct_solve(flow, g, mode, w0)
    sol = rec.solution
    formula, balance = pressure_momentum_check(flow, g, mode, direct.omega, w0)
    diag = {
        "k": k, "re_lambda": lam.real, "im_lambda": lam.imag, "case": mode.case,
        "alpha0_norm": sol.diagnostics["alpha0_norm"],
        "ratio_norm": sol.diagnostics["ratio_norm"],
        "oracle_difference": g.l2_norm(sol.omega - direct.omega) / g.l2_norm(direct.omega),
        "constraint_residual": sol.diagnostics["U_residual"],
        "pressure_mismatch": abs(formula - balance) / max(abs(balance), 1e-300),
        "condition": direct.condition,
    }
    reports = [r.row() for r in B.check_all(rec, ids)]
    return diag, reports, sol.omega


def _run_tasks(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))  # map keeps input order


# ------------------------------------------------------------- commands


BOUND_COLUMNS = ["flow", "N", "Y_max", "k", "re_lambda", "im_lambda", "case", "id",
                 "lhs", "rhs", "constant", "ceiling", "passed", "data"]
TD_MODE_COLUMNS = ["flow", "N", "Y_max", "k", "re_lambda", "im_lambda", "case",
                   "alpha0", "ratio", "oracle_difference", "neumann_residual",
                   "energy_residual", "cancellation_1", "cancellation_hydro",
                   "mean_residual_bar", "condition"]
HNS_MODE_COLUMNS = ["flow", "N", "Y_max", "k", "re_lambda", "im_lambda", "case",
                    "alpha0_norm", "ratio_norm", "oracle_difference",
                    "constraint_residual", "pressure_mismatch", "condition"]


def _tag(rows, flow, N, Y_max, data=None):
    for r in rows:
        r.update(flow=flow, N=N, Y_max=Y_max)
        if data is not None:
            r["data"] = data
    return rows


def _finish_bounds(rows, factor):
    """Apply ceilings to report rows in place; returns the per-id summary."""
    reps = [B.BoundReport(r["id"], r["k"], complex(r["re_lambda"], r["im_lambda"]),
                          r["case"], r["lhs"], r["rhs"], r["constant"]) for r in rows]
    summary = B.apply_ceilings(reps, factor)
    for r, rep in zip(rows, reps):
        r["ceiling"] = rep.ceiling
        r["passed"] = rep.passed
    return summary


def _data_tag(cfg):
    conv = "compatible" if cfg.sweep.A_init == "compatible" else f"A_init={cfg.sweep.A_init}"
    return f"{cfg.sweep.data};{conv}"


def _k0_check(ks, k0):
    low = [k for k in ks if abs(float(k)) < k0]
    if low:
        raise ConfigurationError(f"k values {low} lie below k0 = {k0}")


def cmd_check_flow(cfg, out):
    flow = _flow(cfg)
    if flow.domain is Domain.HALF_LINE:
        g = _td_grid(cfg)
    else:
        g = _grid(Domain.UNIT_INTERVAL.value, cfg.hns.N, 1.0, 1.0)
    rep = check_assumptions(flow, g, k=cfg.sweep.k0)
    d = rep.as_dict()
    d.update(N=g.N, Y_max=g.Y_max)
    write_json(os.path.join(out, "assumptions.json"), d)
    for name, ok in rep.checks.items():
        print(f"{name:14s} {'ok' if ok else 'FAILED'}")
    return EXIT_OK if rep.ok else EXIT_REGRESSION


def _td_sweep(cfg, out, ks, mults, prefix, profiles=False):
    _k0_check(ks, cfg.sweep.k0)
    modes = _modes(ks, mults, cfg.sweep.K_star)
    tasks = [(cfg, m.k, m.lam, tuple(cfg.sweep.inequalities)) for m in modes]
    results = _run_tasks(td_mode_task, tasks, cfg.workers)
    flow = _flow(cfg).name
    diags = _tag([r[0] for r in results], flow, cfg.N, cfg.Y_max)
    rows = _tag([row for r in results for row in r[1]], flow, cfg.N, cfg.Y_max,
                _data_tag(cfg))
    summary = _finish_bounds(rows, cfg.sweep.ceiling_factor)
    write_csv(os.path.join(out, f"{prefix}_bounds.csv"), rows, BOUND_COLUMNS)
    write_csv(os.path.join(out, f"{prefix}_modes.csv"), diags, TD_MODE_COLUMNS)
    write_json(os.path.join(out, f"{prefix}_bounds.json"), rows)
    write_json(os.path.join(out, f"{prefix}_summary.json"), {
        "flow": flow, "N": cfg.N, "Y_max": cfg.Y_max, "K_star": cfg.sweep.K_star,
        "ceiling_factor": cfg.sweep.ceiling_factor, "data": _data_tag(cfg),
        "modes": len(modes), "inequalities": summary,
        "max_alpha0": max(d["alpha0"] for d in diags),
        "max_ratio": max(d["ratio"] for d in diags),
        "max_oracle_difference": max(d["oracle_difference"] for d in diags),
    })
    if profiles:
        g = _td_grid(cfg)
        for m, r in zip(modes, results):
            prof = [{"y": y, "re_omega": w.real, "im_omega": w.imag}
                    for y, w in zip(g.nodes, r[2])]
            name = f"profile_k{m.k:g}_im{m.lam.imag:g}.csv"
            write_csv(os.path.join(out, name), prof, ["y", "re_omega", "im_omega"])
            write_json(os.path.join(out, name.replace(".csv", ".json")),
                       {"k": m.k, "lambda": m.lam, "A": r[3], "flow": flow, "N": cfg.N})
    if cfg.figures:
        from .plotting import plot_constants, plot_profiles
        plot_constants(rows, os.path.join(out, f"{prefix}_constants.png"))
        if profiles:
            g = _td_grid(cfg)
            plot_profiles(g.nodes, [r[2] for r in results],
                          os.path.join(out, f"{prefix}_profiles.png"),
                          [f"k={m.k:g}, Im={m.lam.imag:g}" for m in modes])
    bad = [i for i, s in summary.items() if not s["passed"]]
    for ident, s in summary.items():
        print(f"{ident:24s} median {s['median']:.3e} max {s['max']:.3e} "
              f"{'ok' if s['passed'] else 'ABOVE CEILING'}")
    return EXIT_REGRESSION if bad else EXIT_OK


def cmd_resolvent(cfg, out):
    return _td_sweep(cfg, out, cfg.resolvent.k, cfg.resolvent.imag_multipliers,
                     "resolvent", profiles=True)


def cmd_sweep(cfg, out):
    return _td_sweep(cfg, out, cfg.sweep.k, cfg.sweep.imag_multipliers, "sweep")


def cmd_hns(cfg, out):
    h = cfg.hns
    modes = _modes(h.k, h.imag_multipliers, h.K_star)
    tasks = [(cfg, m.k, m.lam, tuple(h.inequalities)) for m in modes]
    results = _run_tasks(hns_mode_task, tasks, cfg.workers)
    diags = _tag([r[0] for r in results], h.profile, h.N, 1.0)
    rows = _tag([row for r in results for row in r[1]], h.profile, h.N, 1.0, h.data)
    summary = _finish_bounds(rows, cfg.sweep.ceiling_factor)
    write_csv(os.path.join(out, "hns_bounds.csv"), rows, BOUND_COLUMNS)
    write_csv(os.path.join(out, "hns_modes.csv"), diags, HNS_MODE_COLUMNS)
    write_json(os.path.join(out, "hns_summary.json"), {
        "flow": h.profile, "N": h.N, "K_star": h.K_star, "modes": len(modes),
        "inequalities": summary,
        "max_oracle_difference": max(d["oracle_difference"] for d in diags),
    })
    if cfg.figures:
        from .plotting import plot_constants
        plot_constants(rows, os.path.join(out, "hns_constants.png"))
    bad = [i for i, s in summary.items() if not s["passed"]]
    for ident, s in summary.items():
        print(f"{ident:24s} median {s['median']:.3e} max {s['max']:.3e} "
              f"{'ok' if s['passed'] else 'ABOVE CEILING'}")
    return EXIT_REGRESSION if bad else EXIT_OK


def evolve_task(args):
    cfg, k = args
    flow = _flow(cfg)
    g = _td_grid(cfg)
    e = cfg.evolve
    w0 = DATA_FAMILIES[e.data](g) if e.data in DATA_FAMILIES else None
    if w0 is None:
        raise ConfigurationError(f"unknown data family {e.data!r}")
    dt = e.dt_fraction * max_stable_dt(flow, g, k)
    every = max(1, int(round(e.sample_interval / dt)))
    return step_mode(flow, g, k, w0, op_U(g, w0), e.T, dt, record_every=every,
                     drift_tol=cfg.drift_tol)


def cmd_evolve(cfg, out):
    e = cfg.evolve
    trs = _run_tasks(evolve_task, [(cfg, float(k)) for k in e.k], cfg.workers)
    flow = _flow(cfg).name
    for tr in trs:
        rows = [{"flow": flow, "N": cfg.N, "Y_max": cfg.Y_max, "k": tr.k, "t": t,
                 "h_norm": h} for t, h in zip(tr.times, tr.h_norm)]
        write_csv(os.path.join(out, f"trajectory_k{tr.k:g}.csv"), rows,
                  ["flow", "N", "Y_max", "k", "t", "h_norm"])
    fit = fit_gevrey(trs, tuple(e.window))
    doc = fit.as_dict()
    doc.update(flow=flow, N=cfg.N, Y_max=cfg.Y_max, T=e.T, window=list(e.window),
               data=e.data,
               unstable=[tr.k for tr in trs if tr.unstable],
               max_drift=[float(tr.drift.max()) for tr in trs],
               dt=[tr.dt for tr in trs])
    write_json(os.path.join(out, "gevrey.json"), doc)
    if cfg.figures:
        from .plotting import plot_trajectories
        plot_trajectories(trs, fit, os.path.join(out, "evolve.png"))
    print(f"fitted exponent p = {fit.p:.4f}, beta = {fit.beta:.4f}, "
          f"residual = {fit.residual:.3e}")
    for note in fit.notes:
        print(note)
    return EXIT_NUMERICAL if any(tr.unstable for tr in trs) else EXIT_OK


COMMANDS = {
    "check-flow": cmd_check_flow,
    "resolvent": cmd_resolvent,
    "hns": cmd_hns,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
}


# ---------------------------------------------------------------- entry


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", type=int, metavar="INT", help="worker processes")
    common.add_argument("--grid-n", type=int, metavar="INT", help="collocation N")
    common.add_argument("--ymax", type=float, metavar="REAL", help="half-line truncation")
    common.add_argument("--profile", help="override [flow] profile")
    common.add_argument("--no-figures", action="store_true", help="skip PNG output")
    p = argparse.ArgumentParser(prog="tdstab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def _apply_overrides(cfg, ns):
    changes = {}
    if ns.out is not None:
        changes["out"] = ns.out
    if ns.workers is not None:
        changes["workers"] = ns.workers
    if ns.ymax is not None:
        changes["Y_max"] = ns.ymax
    if ns.profile is not None:
        changes["profile"] = ns.profile
    if ns.no_figures:
        changes["figures"] = False
    if ns.grid_n is not None:
        if ns.command == "hns":
            changes["hns"] = replace(cfg.hns, N=ns.grid_n)
        else:
            changes["N"] = ns.grid_n
    return replace(cfg, **changes).validate()


def _error_record(exc, code, out):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    if out:
        try:
            os.makedirs(out, exist_ok=True)
            write_json(os.path.join(out, "error.json"), rec)
        except OSError:
            pass
    return code


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    out = ns.out
    try:
        cfg = _apply_overrides(C.load(ns.config), ns)
        out = cfg.out
        ShearFlow.from_name(cfg.profile, **cfg.profile_params)
        _td_grid(cfg)
        os.makedirs(out, exist_ok=True)
        return COMMANDS[ns.command](cfg, out)
    except (USAGE_ERRORS + (ValueError, KeyError)) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            return _error_record(exc, EXIT_NUMERICAL, out)
        return _error_record(exc, EXIT_USAGE, out)
    except NUMERICAL_ERRORS as exc:
        return _error_record(exc, EXIT_NUMERICAL, out)


if __name__ == "__main__":
    sys.exit(main())
