"""Per-mode resolvent of the linearized hydrostatic Navier-Stokes system on [0, 1].

    lambda w + ik U_s w - ik U_s'' Phi[w] - w'' = w_init,   U[w] = 0,

where Phi[w] is the stream function (Phi'' = w, Phi(0) = Phi(1) = 0) and
U[w] = (Phi'(0), Phi'(1)). Boundary-layer pieces are vector valued, one
component per wall, and the geometric series has a 2x2 matrix ratio.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import hns_U
from .linsolve import Factorization, solve
from .shearflow import Domain
from .td_resolvent import Mode, OutOfRegionError, SeriesDivergenceError


@dataclass
class Phi0Coefficients:
    a: complex
    b: complex
    c: complex
    d: complex
    residual: float


@dataclass
class HnsPieces:
    Phi0: np.ndarray
    coeffs: Phi0Coefficients
    xi0_minus: np.ndarray
    xi0_plus: np.ndarray
    Xi0_minus: np.ndarray
    Xi0_plus: np.ndarray
    alpha0: np.ndarray
    Omega_BL: np.ndarray
    F_H: np.ndarray
    M_H: np.ndarray
    omega_H0: np.ndarray
    lambda0: np.ndarray


@dataclass
class HnsSolution:
    omega: np.ndarray
    path: str
    pieces: HnsPieces = None
    condition: float = float("nan")
    diagnostics: dict = field(default_factory=dict)


def _check(grid, mode):
    if grid.domain is not Domain.UNIT_INTERVAL:
        raise ValueError("hydrostatic Navier-Stokes needs a unit-interval grid")
    if mode.lam.real <= 0:
        raise OutOfRegionError("Re(lambda) must be positive")


def phi0_coefficients(lam):
    """Exact (a, b, c, d) of the first stream-function component.

    Phi_1 = a e^{-s y} - b e^{-s (1-y)} + c (y - 1/2) - d with s = lambda^{1/2},
    fixed by Phi_1(0) = Phi_1(1) = 0, Phi_1'(0) = 1, Phi_1'(1) = 0.
    """
    s = np.sqrt(complex(lam))
    if s.real <= 0:
        raise OutOfRegionError("Re(lambda^{1/2}) must be positive")
    e = np.exp(-s)
    M = np.array([
        [1.0, -e, -0.5, -1.0],
        [e, -1.0, 0.5, -1.0],
        [-s, -s * e, 1.0, 0.0],
        [-s * e, -s, 1.0, 0.0],
    ], dtype=complex)
    rhs = np.array([0.0, 0.0, 1.0, 0.0], dtype=complex)
    a, b, c, d = np.linalg.solve(M, rhs)
    res = float(np.abs(M @ np.array([a, b, c, d]) - rhs).max())
    return Phi0Coefficients(a, b, c, d, res)


def phi0_basis(mode, grid):
    """Two-component stream function Phi0 (shape (n, 2)) and its coefficients."""
    _check(grid, mode)
    co = phi0_coefficients(mode.lam)
    s = mode.sqrt_lam
    y = grid.nodes
    em, ep = np.exp(-s * y), np.exp(-s * (1.0 - y))
    lin = co.c * (y - 0.5)
    Phi = np.empty((grid.size, 2), dtype=complex)
    Phi[:, 0] = co.a * em - co.b * ep + lin - co.d
    Phi[:, 1] = co.b * em - co.a * ep + lin + co.d
    return Phi, co


def xi0_parts(mode, grid, co):
    """(xi0_minus, xi0_plus), each (n, 2): wall-localized parts of Phi0''."""
    s = mode.sqrt_lam
    lam = mode.lam
    y = grid.nodes
    em, ep = np.exp(-s * y), np.exp(-s * (1.0 - y))
    minus = lam * np.column_stack([co.a * em, co.b * em])
    plus = lam * np.column_stack([-co.b * ep, -co.a * ep])
    return minus, plus


class HnsOperators:
    def __init__(self, flow, grid, mode):
        _check(grid, mode)
        self.flow, self.grid, self.mode = flow, grid, mode
        y = grid.nodes
        self.U, self.U1, self.U2, _ = flow.eval(y)
        k, lam = mode.k, mode.lam
        self.L_bl = np.diag(lam + 1j * k * self.U).astype(complex) - grid.D2
        self.L_full = self.L_bl - 1j * k * self.U2[:, None] * grid.Phi_matrix
        self._bl = None
        self._hydro = None

    def bl_factor(self):
        if self._bl is None:
            A = self.L_bl.copy()
            A[[0, -1]] = 0.0
            A[0, 0] = A[-1, -1] = 1.0
            self._bl = Factorization(A)
        return self._bl

    def hydro_factor(self):
        if self._hydro is None:
            A = self.L_full.copy()
            A[0] = self.grid.D1[0]
            A[-1] = self.grid.D1[-1]
            self._hydro = Factorization(A)
        return self._hydro

    def solve_bl(self, R):
        R = np.array(R, dtype=complex)
        R[[0, -1]] = 0.0
        return self.bl_factor().solve(R)

    def solve_hydro(self, R):
        R = np.array(R, dtype=complex)
        R[[0, -1]] = 0.0
        return self.hydro_factor().solve(R)


def hns_pieces(flow, grid, mode, omega_init=None, ops=None, check=True):
    ops = ops or HnsOperators(flow, grid, mode)
    k = mode.k
    Phi0, co = phi0_basis(mode, grid)
    xm, xp = xi0_parts(mode, grid, co)
    Um = ops.U[:, None]
    Xm = ops.solve_bl(-1j * k * Um * xm)
    Xp = ops.solve_bl(-1j * k * Um * xp)
    xi0 = xm + xp
    Xi0 = Xm + Xp
    alpha0 = hns_U(grid, Xi0)
    if check and np.linalg.norm(alpha0, 2) >= 1:
        raise SeriesDivergenceError(f"||alpha0|| = {np.linalg.norm(alpha0, 2):.3g} >= 1")
    Omega = (xi0 + Xi0) @ np.linalg.inv(np.eye(2) + alpha0)
    F_H = ops.solve_hydro(ops.U2[:, None] * (grid.Phi_matrix @ Omega))
    M_H = hns_U(grid, F_H)
    if check and np.linalg.norm(1j * k * M_H, 2) >= 1:
        raise SeriesDivergenceError(f"||ik M_H|| = {np.linalg.norm(k * M_H, 2):.3g} >= 1")
    if omega_init is None:
        w_H0 = np.zeros(grid.size, dtype=complex)
    else:
        w_H0 = ops.solve_hydro(omega_init)
    lam0 = -hns_U(grid, w_H0)
    return HnsPieces(Phi0, co, xm, xp, Xm, Xp, alpha0, Omega, F_H, M_H, w_H0, lam0)


def hns_assemble(flow, grid, mode, omega_init, check=True):
    """Resolvent by the matrix-ratio series, summed in closed form."""
    p = hns_pieces(flow, grid, mode, omega_init, check=check)
    k = mode.k
    total = np.linalg.solve(np.eye(2) + 1j * k * p.M_H, p.lambda0)
    omega = p.omega_H0 + (p.Omega_BL + 1j * k * p.F_H) @ total
    diag = {
        "alpha0_norm": float(np.linalg.norm(p.alpha0, 2)),
        "ratio_norm": float(np.linalg.norm(1j * k * p.M_H, 2)),
        "U_residual": float(np.abs(hns_U(grid, omega)).max()),
    }
    return HnsSolution(omega, "Iterative", p, diagnostics=diag)


def matrix_series_partial_sums(p, k, J):
    """Partial sums of lambda_j = (-ik M_H)^j lambda0, j < J."""
    out = []
    term = p.lambda0.copy()
    acc = np.zeros(2, dtype=complex)
    for _ in range(J):
        acc = acc + term
        out.append(acc.copy())
        term = -1j * k * p.M_H @ term
    return out


def dPhi_matrix(grid):
    """Derivative of the Green-kernel stream function, exact in the kernel."""
    y = grid.nodes
    n = grid.size
    ones = np.ones(n)
    return grid.J * y[None, :] + (np.outer(ones, grid.quad_weights) - grid.J) * (y - 1.0)[None, :]


def pressure_rows(flow, grid, k):
    """Row vector P with P @ w = -2ik int U_s Phi'[w] + w(1) - w(0)."""
    U = flow.eval(grid.nodes)[0]
    P = -2j * k * (grid.quad_weights * U) @ dPhi_matrix(grid)
    P = P.astype(complex)
    P[-1] += 1.0
    P[0] -= 1.0
    return P


def hns_direct_matrix(flow, grid, mode):
    ops = HnsOperators(flow, grid, mode)
    M = ops.L_full.copy()
    P = pressure_rows(flow, grid, mode.k)
    M[0] = grid.D1[0] - P
    M[-1] = grid.D1[-1] - P
    return M


def hns_direct_solve(flow, grid, mode, omega_init):
    """Monolithic solve with the mixed wall conditions w'(0) = w'(1) = pressure trace."""
    rhs = np.array(omega_init, dtype=complex)
    rhs[[0, -1]] = 0.0
    sol = solve(hns_direct_matrix(flow, grid, mode), rhs)
    omega = sol.x
    diag = {
        "U_residual": float(np.abs(hns_U(grid, omega)).max()),
        "pressure_trace": complex(pressure_rows(flow, grid, mode.k) @ omega),
        "backward_error": sol.backward_error,
    }
    return HnsSolution(omega, "Direct", condition=sol.condition, diagnostics=diag)


def pressure_momentum_check(flow, grid, mode, omega, omega_init):
    """Pressure trace from the formula and from the y-integrated momentum balance.

    With u = Phi'[w] and v = -ik Phi[w], integrating the u-equation
    lambda u + ik U u + U' v + ik p - u'' = u_init over (0, 1) gives
    ik p = int u_init - lambda int u - ik int U u - int U' v + u'(1) - u'(0),
    where int u = 0 for w in the constraint space. Returns (formula, balance).
    """
    k, lam = mode.k, mode.lam
    dPhi = dPhi_matrix(grid)
    U, U1, _, _ = flow.eval(grid.nodes)
    u = dPhi @ omega
    v = -1j * k * (grid.Phi_matrix @ omega)
    u_init = dPhi @ omega_init
    w = grid.quad_weights
    ikp = (w @ u_init - lam * (w @ u) - 1j * k * (w @ (U * u))
           - w @ (U1 * v) + omega[-1] - omega[0])
    formula = complex(pressure_rows(flow, grid, k) @ omega)
    # formula is the x-derivative of p, i.e. ik p
    return formula, complex(ikp)


def project_constraint(grid, f):
    """Remove span{1, y} from f in the quadrature inner product so hns_U(f) = 0."""
    y = grid.nodes
    w = grid.quad_weights
    basis = np.column_stack([np.ones_like(y), y])
    G = basis.T @ (w[:, None] * basis)
    coef = np.linalg.solve(G, basis.T @ (w * f))
    return f - basis @ coef


def hns_data(grid, family="gaussian"):
    y = grid.nodes
    if family == "gaussian":
        f = np.exp(-((y - 0.4) / 0.15) ** 2)
    elif family == "sine":
        f = np.sin(3 * np.pi * y)
    else:
        raise ValueError(f"unknown data family {family!r}")
    return project_constraint(grid, f.astype(complex))


__all__ = [
    "Mode", "phi0_coefficients", "phi0_basis", "xi0_parts", "hns_pieces",
    "hns_assemble", "hns_direct_solve", "hns_direct_matrix", "pressure_rows",
    "pressure_momentum_check", "project_constraint", "hns_data",
    "matrix_series_partial_sums", "HnsSolution", "HnsPieces",
]
