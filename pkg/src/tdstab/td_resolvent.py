"""Per-mode resolvent of the linearized Triple-Deck system on the half line.

For a Fourier-Laplace mode (lambda, k) the unknowns are the vorticity profile
omega(y) and the displacement amplitude A, coupled through

    (lambda + ik + ik|k|) A = ik V[omega] + A_init
    (lambda + ik V_s) omega - ik U_s'' V_y[omega] - omega'' = ik U_s'' y A + omega_init
    U[omega] = A.

:func:`assemble` builds the solution from boundary-layer and hydrostatic
pieces summed as geometric series; :func:`direct_solve` solves the coupled
system in one dense collocation solve and serves as its oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import op_U, op_V
from .linsolve import Factorization, SolverError, solve
from .shearflow import Domain, InvalidModeError


class OutOfRegionError(ValueError):
    pass


class SeriesDivergenceError(OutOfRegionError):
    pass


class NearResonanceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Mode:
    k: float
    lam: complex

    def __post_init__(self):
        if self.k == 0:
            raise InvalidModeError("k must be nonzero")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def sqrt_lam(self):
        return np.sqrt(self.lam)  # principal branch, Re >= 0

    @property
    def case(self):
        """1 when |lambda + ik|k|| >= |k|^2 / 2, else 2 (diagnostic only)."""
        k = self.k
        return 1 if abs(self.lam + 1j * k * abs(k)) >= 0.5 * k * k else 2

    def in_region(self, K_star, k0):
        return abs(self.k) >= k0 and self.lam.real >= K_star * abs(self.k) ** (2.0 / 3.0)


def ray_mode(k, K_star, imag=0.0, scale=1.0):
    """Mode on the line Re(lambda) = scale * K_star |k|^{2/3}."""
    return Mode(k, scale * K_star * abs(k) ** (2.0 / 3.0) + 1j * imag)


@dataclass
class ResolventPieces:
    xi0: np.ndarray
    Xi0: np.ndarray
    Omega_BL: np.ndarray
    F_H: np.ndarray
    omega_H0: np.ndarray
    omega_IH0: np.ndarray
    alpha0: complex
    lambda0: complex
    lambda_star: complex
    lambda_tilde0: complex
    lambda_tilde_star: complex
    ratio: complex
    omega_bar: np.ndarray = None
    omega_inhom: np.ndarray = None


@dataclass
class Solution:
    omega: np.ndarray
    A: complex
    path: str
    pieces: ResolventPieces = None
    condition: float = float("nan")
    diagnostics: dict = field(default_factory=dict)


class ModeOperators:
    """Collocation matrices for one (flow, grid, mode), built once and reused."""

    def __init__(self, flow, grid, mode):
        if grid.domain is not Domain.HALF_LINE:
            raise ValueError("Triple-Deck resolvent needs a half-line grid")
        if mode.lam.real <= 0:
            raise OutOfRegionError("Re(lambda) must be positive")
        self.flow, self.grid, self.mode = flow, grid, mode
        y = grid.nodes
        self.y = y
        self.U2 = flow.eval(y)[2]
        self.V = flow.eval_V(y)[0]
        k, lam = mode.k, mode.lam
        n = grid.size
        diag = lam + 1j * k * self.V
        self.L_bl = np.diag(diag).astype(complex) - grid.D2
        self.L_hydro = self.L_bl - 1j * k * self.U2[:, None] * grid.Vy_matrix
        self._bl_fac = None
        self._hydro_fac = None
        self.n = n

    def bl_matrix(self):
        A = self.L_bl.copy()
        A[0] = 0.0
        A[0, 0] = 1.0
        A[-1] = 0.0
        A[-1, -1] = 1.0
        return A

    def hydro_matrix(self):
        A = self.L_hydro.copy()
        A[0] = self.grid.D1[0]
        A[-1] = 0.0
        A[-1, -1] = 1.0
        return A

    def bl_factor(self):
        if self._bl_fac is None:
            self._bl_fac = Factorization(self.bl_matrix())
        return self._bl_fac

    def hydro_factor(self):
        if self._hydro_fac is None:
            self._hydro_fac = Factorization(self.hydro_matrix())
        return self._hydro_fac


def xi0(mode, grid):
    """Boundary-layer profile lambda^{1/2} exp(-lambda^{1/2} y)."""
    if mode.lam.real <= 0:
        raise OutOfRegionError("Re(lambda) must be positive")
    s = mode.sqrt_lam
    return s * np.exp(-s * grid.nodes)


def solve_Xi0(flow, grid, mode, ops=None):
    """Correction Xi0: (lambda + ik V_s) Xi - Xi'' = -ik V_s xi0, Xi(0) = 0."""
    ops = ops or ModeOperators(flow, grid, mode)
    rhs = -1j * mode.k * ops.V * xi0(mode, grid)
    rhs[0] = rhs[-1] = 0.0
    return ops.bl_factor().solve(rhs)


def omega_BL(flow, grid, mode, ops=None, check=True):
    """Summed boundary-layer profile (xi0 + Xi0) / (1 + alpha0).

    Returns (Omega_BL, alpha0, xi0, Xi0).
    """
    ops = ops or ModeOperators(flow, grid, mode)
    x0 = xi0(mode, grid)
    X0 = solve_Xi0(flow, grid, mode, ops)
    alpha0 = complex(op_U(grid, X0))
    if check and abs(alpha0) >= 1:
        raise SeriesDivergenceError(f"|alpha0| = {abs(alpha0):.3g} >= 1")
    return (x0 + X0) / (1.0 + alpha0), alpha0, x0, X0


def solve_hydrostatic(flow, grid, mode, R, ops=None):
    """(lambda + ik V_s) f - ik U_s'' V_y[f] - f'' = R with f'(0) = 0."""
    ops = ops or ModeOperators(flow, grid, mode)
    rhs = np.array(R, dtype=complex)
    rhs[0] = rhs[-1] = 0.0
    return ops.hydro_factor().solve(rhs)


def pieces(flow, grid, mode, omega_init=None, ops=None, check=True):
    """All series pieces for one mode."""
    ops = ops or ModeOperators(flow, grid, mode)
    k = mode.k
    y = grid.nodes
    Om, alpha0, x0, X0 = omega_BL(flow, grid, mode, ops, check=check)
    F_H = solve_hydrostatic(flow, grid, mode, ops.U2 * (grid.Vy_matrix @ Om), ops)
    w_H0 = solve_hydrostatic(flow, grid, mode, 1j * k * ops.U2 * y, ops)
    if omega_init is None:
        w_IH0 = np.zeros(grid.size, dtype=complex)
    else:
        w_IH0 = solve_hydrostatic(flow, grid, mode, omega_init, ops)
    UF = complex(op_U(grid, F_H))
    ratio = -1j * k * UF
    if check and abs(ratio) >= 1:
        raise SeriesDivergenceError(f"|ik U[F_H]| = {abs(ratio):.3g} >= 1")
    lam0 = 1.0 - complex(op_U(grid, w_H0))
    lamt0 = -complex(op_U(grid, w_IH0))
    lam_star = lam0 / (1.0 - ratio)
    lamt_star = lamt0 / (1.0 - ratio)
    p = ResolventPieces(x0, X0, Om, F_H, w_H0, w_IH0, alpha0,
                        lam0, lam_star, lamt0, lamt_star, ratio)
    p.omega_bar = lam_star * Om + w_H0 + 1j * k * lam_star * F_H
    p.omega_inhom = lamt_star * Om + w_IH0 + 1j * k * lamt_star * F_H
    return p


def assemble(flow, grid, mode, omega_init=None, A_init=0.0, check=True, ops=None):
    """Resolvent by the geometric-series construction."""
    k, lam = mode.k, mode.lam
    if omega_init is None:
        omega_init = np.zeros(grid.size, dtype=complex)
    p = pieces(flow, grid, mode, omega_init, ops=ops, check=check)
    denom = lam + 1j * k + 1j * k * abs(k) - 1j * k * complex(op_V(grid, p.omega_bar))
    if abs(denom) < 1e-12 * (abs(lam) + k * k):
        raise NearResonanceError(f"scalar denominator {abs(denom):.3e} too small")
    A = (1j * k * complex(op_V(grid, p.omega_inhom)) + A_init) / denom
    omega = A * p.omega_bar + p.omega_inhom
    diag = {
        "alpha0": p.alpha0,
        "ratio": p.ratio,
        "mean_residual_bar": abs(op_U(grid, p.omega_bar) - 1.0),
        "denominator": denom,
        "case": mode.case,
    }
    return Solution(omega, complex(A), "Iterative", p, diagnostics=diag)


def direct_matrix(flow, grid, mode):
    """Monolithic matrix in the unknowns (omega_0..omega_N, A)."""
    k, lam = mode.k, mode.lam
    y = grid.nodes
    n = grid.size
    _, _, U2, _ = flow.eval(y)
    V = flow.eval_V(y)[0]
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = np.diag(lam + 1j * k * V) - 1j * k * U2[:, None] * grid.Vy_matrix - grid.D2
    M[:n, n] = -1j * k * U2 * y
    M[0, :] = 0.0
    M[0, :n] = grid.quad_weights
    M[0, n] = -1.0
    M[n - 1, :] = 0.0
    M[n - 1, n - 1] = 1.0
    M[n, :n] = -1j * k * grid.V_row
    M[n, n] = lam + 1j * k + 1j * k * abs(k)
    return M


def direct_solve(flow, grid, mode, omega_init=None, A_init=0.0):
    """Resolvent from one dense solve of the coupled system."""
    n = grid.size
    rhs = np.zeros(n + 1, dtype=complex)
    if omega_init is not None:
        rhs[:n] = omega_init
    rhs[0] = 0.0
    rhs[n - 1] = 0.0
    rhs[n] = A_init
    sol = solve(direct_matrix(flow, grid, mode), rhs)
    omega, A = sol.x[:n], complex(sol.x[n])
    diag = {
        "constraint_residual": abs(op_U(grid, omega) - A),
        "backward_error": sol.backward_error,
        "case": mode.case,
    }
    return Solution(omega, A, "Direct", condition=sol.condition, diagnostics=diag)


def h_norm(grid, omega, A):
    """(||(1+y)^3 omega||^2 + |A|^2)^{1/2}."""
    return float(np.sqrt(grid.l2_norm((1.0 + grid.nodes) ** 3 * omega) ** 2 + abs(A) ** 2))


def relative_h_difference(grid, s1, s2):
    num = h_norm(grid, s1.omega - s2.omega, s1.A - s2.A)
    den = max(h_norm(grid, s2.omega, s2.A), 1e-300)
    return num / den


def neumann_trace(grid, sol):
    """(omega'(0), ik|k| A) for the Neumann form of the mean condition."""
    return complex(grid.D1[0] @ sol.omega)


def series_partial_sums(grid, mode, p, J):
    """lambda_j = ratio^j lambda0 partial sums of omega_bar, j < J."""
    k = mode.k
    out = []
    lam_sum = 0.0
    for j in range(J):
        lam_sum = lam_sum + p.ratio**j * p.lambda0
        out.append(lam_sum * p.Omega_BL + p.omega_H0 + 1j * k * lam_sum * p.F_H)
    return out


def gaussian_data(grid, center=2.0):
    y = grid.nodes
    return np.exp(-(y - center) ** 2).astype(complex)


def compact_bump_data(grid, a=1.0, b=4.0):
    y = grid.nodes
    out = np.zeros_like(y)
    inside = (y > a) & (y < b)
    t = (2 * y[inside] - a - b) / (b - a)
    out[inside] = np.exp(-1.0 / (1.0 - t**2))
    return out.astype(complex)


def algebraic_data(grid):
    y = grid.nodes
    return ((1.0 + y) ** -4).astype(complex)


DATA_FAMILIES = {
    "gaussian": gaussian_data,
    "compact": compact_bump_data,
    "algebraic": algebraic_data,
}


__all__ = [
    "Mode", "ray_mode", "ResolventPieces", "Solution", "ModeOperators",
    "xi0", "solve_Xi0", "omega_BL", "solve_hydrostatic", "pieces", "assemble",
    "direct_matrix", "direct_solve", "h_norm", "relative_h_difference",
    "neumann_trace", "series_partial_sums", "DATA_FAMILIES",
    "OutOfRegionError", "SeriesDivergenceError", "NearResonanceError", "SolverError",
]
