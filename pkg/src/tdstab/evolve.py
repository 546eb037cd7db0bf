"""Time-domain evolution of single Fourier modes and growth-rate fits.

The mode system is a differential-algebraic system B x' = -L x in the
unknowns x = (omega at the nodes, A). Time stepping is trapezoidal
(Crank-Nicolson) on the whole operator: with dense LU the nonlocal terms cost
nothing extra when implicit, and explicit second-order extrapolation of the
advection term is unstable on the imaginary axis. The wall row carries the
Neumann form omega'(0) = ik|k| A, so the mean condition U[omega] = A is
not imposed and its drift measures the time-discretization error.

Steps are taken in a frame rotating at the displacement frequency
k (1 + |k|), which leaves every modulus unchanged and keeps the fast
Benjamin-Ono oscillation out of the stepping error.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import ConfigurationError, op_U
from .linsolve import Factorization
from .td_resolvent import Mode, direct_solve, h_norm


class ContourError(RuntimeError):
    pass


@dataclass
class Trajectory:
    k: float
    times: np.ndarray
    omega: np.ndarray
    A: np.ndarray
    h_norm: np.ndarray
    drift: np.ndarray
    dt: float
    unstable: bool = False
    notes: list = field(default_factory=list)


def _evolution_operator(flow, grid, k):
    """Return (L, B, wall rows) with B x' = -L x on interior and A rows."""
    y = grid.nodes
    n = grid.size
    U2 = flow.eval(y)[2]
    V = flow.eval_V(y)[0]
    L = np.zeros((n + 1, n + 1), dtype=complex)
    L[:n, :n] = np.diag(1j * k * V) - 1j * k * U2[:, None] * grid.Vy_matrix - grid.D2
    L[:n, n] = -1j * k * U2 * y
    L[n, :n] = -1j * k * grid.V_row
    L[n, n] = 1j * k + 1j * k * abs(k)
    B = np.eye(n + 1, dtype=complex)
    B[0, 0] = 0.0
    B[n - 1, n - 1] = 0.0
    # algebraic rows: omega'(0) - ik|k| A = 0 and omega(Y_max) = 0
    L[0] = 0.0
    L[0, :n] = grid.D1[0]
    L[0, n] = -1j * k * abs(k)
    L[n - 1] = 0.0
    L[n - 1, n - 1] = 1.0
    return L, B


def max_stable_dt(flow, grid, k):
    V = flow.eval_V(grid.nodes)[0]
    return 0.5 / (abs(k) * max(np.abs(V).max(), 1e-300))


def step_mode(flow, grid, k, omega_init, A_init, T, dt, record_every=1,
              drift_tol=1e-3, check_dt=True, startup=4):
    """Evolve one mode from (omega_init, A_init) to time T.

    ``dt`` must satisfy dt |k| max|V_s| <= 1/2 so that advected profiles stay
    phase accurate. Returns a :class:`Trajectory` sampled every
    ``record_every`` steps (and at T). The first ``startup`` half steps are
    backward Euler, which damps the stiff wall layer created by data that do
    not satisfy the Neumann condition exactly.
    """
    if check_dt and dt * abs(k) * np.abs(flow.eval_V(grid.nodes)[0]).max() > 0.5 + 1e-12:
        raise ConfigurationError(
            f"dt = {dt:.3e} violates dt |k| max|V| <= 1/2 "
            f"(max dt {max_stable_dt(flow, grid, k):.3e})"
        )
    if T <= 0 or dt <= 0:
        raise ConfigurationError("T and dt must be positive")
    nsteps = int(np.ceil(T / dt - 1e-9))
    dt = T / nsteps
    n = grid.size
    L, B = _evolution_operator(flow, grid, k)
    Omega = k * (1.0 + abs(k))
    Lr = L - 1j * Omega * B

    lhs = B / dt + 0.5 * Lr
    rhs_mat = B / dt - 0.5 * Lr
    alg = [0, n - 1]
    lhs[alg] = Lr[alg]
    rhs_mat[alg] = 0.0
    fac = Factorization(lhs)
    be = B / (0.5 * dt) + Lr
    be[alg] = Lr[alg]
    be_rhs = B / (0.5 * dt)
    be_rhs[alg] = 0.0
    startup = min(int(startup) // 2 * 2, 2 * nsteps)
    fac_be = Factorization(be) if startup else None

    x = np.zeros(n + 1, dtype=complex)
    x[:n] = omega_init
    x[n] = A_init

    times, oms, As, norms, drifts = [], [], [], [], []
    notes = []
    unstable = False

    def record(step, x):
        t = step * dt
        phase = np.exp(-1j * Omega * t)
        om, A = phase * x[:n], phase * x[n]
        times.append(t)
        oms.append(om)
        As.append(A)
        norms.append(h_norm(grid, om, A))
        drifts.append(abs(op_U(grid, om) - A))

    record(0, x)
    for step in range(1, nsteps + 1):
        if 2 * step <= startup:
            x = fac_be.solve(be_rhs @ x)
            x = fac_be.solve(be_rhs @ x)
        else:
            x = fac.solve(rhs_mat @ x)
        if step % record_every == 0 or step == nsteps:
            record(step, x)
            scale = max(norms[-1], 1e-300)
            if drifts[-1] > drift_tol * scale and not unstable:
                unstable = True
                notes.append(f"constraint drift {drifts[-1]:.2e} at t = {times[-1]:.4g}")
    return Trajectory(float(k), np.array(times), np.array(oms), np.array(As),
                      np.array(norms), np.array(drifts), dt, unstable, notes)


def spectral_band(flow, grid, k, margin=None):
    """Imaginary-axis interval holding the advective and displacement spectrum."""
    V = flow.eval_V(grid.nodes)[0]
    lo = min(-k * V.max(), -k * V.min(), -k * (1.0 + abs(k)))
    hi = max(-k * V.max(), -k * V.min(), -k * (1.0 + abs(k)))
    if margin is None:
        margin = 2.0 * abs(k) + 10.0
    return lo - margin, hi + margin


@dataclass
class ContourResult:
    omega: np.ndarray
    A: complex
    nodes: int
    tail_estimate: float
    c: float
    h: float


def contour_nodes(band, c, theta, h, t, tol=1e-12, smooth=1.0):
    """Nodes lambda(u) = c + iu - theta d(u) with d a smoothed distance to ``band``.

    ``smooth`` is the softplus width; it must stay well below the margin built
    into ``band`` or the contour bends left before clearing the spectrum.
    The u-range is cut where exp(Re(lambda) t) drops below ``tol``.
    Returns (lambda, dlambda/du, du weights).
    """
    a, b = band
    s = smooth
    reach = (c * t + np.log(1.0 / tol)) / (theta * t) + 4 * s
    u = np.arange(a - reach, b + reach + h, h)

    def softplus(z):
        return np.logaddexp(0.0, z)

    def sig(z):
        return 0.5 * (1.0 + np.tanh(0.5 * z))

    d = s * (softplus((a - u) / s) + softplus((u - b) / s))
    dd = -sig((a - u) / s) + sig((u - b) / s)
    lam = c - theta * d + 1j * u
    dlam = -theta * dd + 1j
    return lam, dlam, np.full(u.shape, h)


def contour_semigroup(flow, grid, k, omega_init, A_init, t, K_star=1.0,
                      theta=0.2, h=None, tol=1e-12, solver=None):
    """Semigroup action by quadrature of exp(lambda t) (lambda + L)^{-1} data.

    The contour runs at Re(lambda) = K_star |k|^{2/3} alongside the spectral
    band and opens to the left with slope ``theta`` beyond it.
    """
    if t <= 0:
        raise ConfigurationError("t must be positive")
    c = K_star * abs(k) ** (2.0 / 3.0)
    if h is None:
        h = c / 6.0
    margin = 2.0 * abs(k) + 10.0
    band = spectral_band(flow, grid, k, margin)
    lam, dlam, du = contour_nodes(band, c, theta, h, t, tol, smooth=margin / 10.0)
    solve_at = solver or (lambda mode: direct_solve(flow, grid, mode, omega_init, A_init))
    n = grid.size
    acc = np.zeros(n + 1, dtype=complex)
    ends = []
    for j, (lj, dj, wj) in enumerate(zip(lam, dlam, du)):
        sol = solve_at(Mode(k, lj))
        f = np.exp(lj * t) * dj * wj / (2j * np.pi)
        acc[:n] += f * sol.omega
        acc[n] += f * sol.A
        if j in (0, len(lam) - 1):
            ends.append(abs(f) / wj * h_norm(grid, sol.omega, sol.A))
    # geometric tail beyond the cut: integrand ~ exp(-theta t |u|)
    tail = max(ends) / (theta * t) if ends else 0.0
    result = ContourResult(acc[:n], complex(acc[n]), len(lam), float(tail), c, h)
    scale = h_norm(grid, result.omega, result.A)
    if tail > 1e-6 * max(scale, 1e-300):
        raise ContourError(f"contour tail {tail:.2e} exceeds tolerance")
    return result


@dataclass
class GevreyFit:
    ks: np.ndarray
    sigma: np.ndarray
    p: float
    beta: float
    residual: float
    used: np.ndarray
    norm_ratio: np.ndarray
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "k": self.ks.tolist(),
            "sigma": self.sigma.tolist(),
            "p": self.p,
            "beta": self.beta,
            "fit_residual": self.residual,
            "used": self.used.tolist(),
            "norm_ratio": self.norm_ratio.tolist(),
            "notes": list(self.notes),
        }


def growth_rate(times, norms, window=(0.5, 1.0)):
    """Least-squares slope of log(norm) over the fraction ``window`` of [0, T]."""
    times = np.asarray(times)
    T = times[-1]
    sel = (times >= window[0] * T - 1e-12) & (times <= window[1] * T + 1e-12)
    if sel.sum() < 2:
        raise ValueError("not enough samples in the growth window")
    return float(np.polyfit(times[sel], np.log(np.asarray(norms)[sel]), 1)[0])


def fit_power_law(ks, sigma):
    """Fit sigma = beta k^p on positive rates. Returns (p, beta, residual, used)."""
    ks = np.asarray(ks, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    used = sigma > 0
    if used.sum() < 2:
        return float("nan"), float("nan"), float("nan"), used
    lk, ls = np.log(np.abs(ks[used])), np.log(sigma[used])
    coef, res, *_ = np.polyfit(lk, ls, 1, full=True)
    p, logb = coef
    resid = float(np.sqrt(np.mean((ls - (p * lk + logb)) ** 2)))
    return float(p), float(np.exp(logb)), resid, used


def fit_gevrey(trajectories, window=(0.5, 1.0)):
    """Growth rate per trajectory and power-law fit across k."""
    if len({tr.k for tr in trajectories}) < 4:
        raise ValueError("need at least 4 distinct wavenumbers")
    trs = sorted(trajectories, key=lambda tr: tr.k)
    ks = np.array([tr.k for tr in trs])
    sigma = np.array([growth_rate(tr.times, tr.h_norm, window) for tr in trs])
    ratio = np.array([tr.h_norm[-1] / tr.h_norm[0] for tr in trs])
    notes = []
    for k, s in zip(ks, sigma):
        if s <= 0:
            notes.append(f"k = {k:g} decays (sigma = {s:.3g}); excluded")
    sig_used = np.maximum(sigma, 0.0)
    p, beta, resid, used = fit_power_law(ks, sig_used)
    return GevreyFit(ks, sigma, p, beta, resid, used, ratio, notes)


def leading_eigenvalues(flow, grid, k, count=3):
    """Eigenvalues of the mode generator with the largest real parts.

    Uses the same constraint rows as the resolvent so the values are the
    singular points of the direct-solve matrix.
    """
    import scipy.linalg as sla
    from .td_resolvent import direct_matrix

    n = grid.size
    M0 = direct_matrix(flow, grid, Mode(k, 0.0))
    B = np.eye(n + 1)
    B[0, 0] = 0.0
    B[n - 1, n - 1] = 0.0
    ev = sla.eigvals(M0, -B)
    ev = ev[np.isfinite(ev)]
    return ev[np.argsort(-ev.real)][:count]
