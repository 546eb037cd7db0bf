"""Mapped Chebyshev collocation grids with quadrature and nonlocal operators.

Half-line problems are truncated to [0, Y_max] with the algebraic map

    y = l (1 + x) / (1 - x + 2 l / Y_max),   x in [-1, 1],

which clusters nodes near the wall. The unit interval uses the affine map
y = (1 + x) / 2.  Every nonlocal operator is a dense matrix acting on nodal
values so that coupled systems stay a single linear solve.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .shearflow import Domain


class ConfigurationError(ValueError):
    pass


def chebdif(N, M):
    """Chebyshev collocation differentiation matrices on x_j = cos(pi j / N).

    Follows the recursion of Weideman and Reddy. Returns the nodes (descending
    from 1 to -1) and an array DM with DM[m-1] the m-th derivative matrix.
    """
    n = N + 1
    k = np.arange(n)
    th = k * np.pi / N
    x = np.sin(np.pi * (N - 2 * k) / (2.0 * N))  # symmetric form of cos(th)

    T = np.tile(th / 2, (n, 1)).T  # T[i, j] = th_i / 2
    DX = 2 * np.sin(T.T + T) * np.sin(T.T - T)
    half = n // 2
    DX = np.vstack([DX[:half], -np.flipud(np.fliplr(DX[: n - half]))])
    DX[k, k] = 1.0

    C = (-1.0) ** k[:, None] * (-1.0) ** k[None, :]
    C = C.astype(float)
    C[0, :] *= 2
    C[-1, :] *= 2
    C[:, 0] /= 2
    C[:, -1] /= 2

    Z = 1.0 / DX
    Z[k, k] = 0.0

    D = np.eye(n)
    DM = np.empty((M, n, n))
    for ell in range(M):
        D = (ell + 1) * Z * (C * np.tile(np.diag(D), (n, 1)).T - D)
        D[k, k] = -np.sum(D, axis=1)  # negative sum trick
        DM[ell] = D
    return x, DM


def _cumulative_integration(N):
    """Matrix Jx with (Jx f)(x_j) = int_{-1}^{x_j} p(s) ds, p the interpolant.

    Nodes are ascending x_j = -cos(pi j / N). Works in Chebyshev coefficient
    space: values -> coefficients, integrate term by term, evaluate.
    """
    j = np.arange(N + 1)
    theta = np.pi * (N - j) / N  # x_j = cos(theta_j), ascending in j
    n = np.arange(N + 1)
    T = np.cos(np.outer(theta, n))

    cbar = np.ones(N + 1)
    cbar[0] = cbar[-1] = 2.0
    to_coef = (2.0 / N) * T.T / np.outer(cbar, cbar)

    # integrate T_n into coefficients of T_0..T_{N+1}
    B = np.zeros((N + 2, N + 1))
    B[1, 0] = 1.0
    if N >= 1:
        B[2, 1] = 0.25
    for m in range(2, N + 1):
        B[m + 1, m] += 1.0 / (2.0 * (m + 1))
        B[m - 1, m] -= 1.0 / (2.0 * (m - 1))

    n2 = np.arange(N + 2)
    T_ext = np.cos(np.outer(theta, n2))
    left = (-1.0) ** n2
    return (T_ext - left[None, :]) @ B @ to_coef


@dataclass(frozen=True, eq=False)
class Grid:
    """Collocation grid on [0, Y_max] (half line) or [0, 1] (unit interval)."""

    domain: Domain
    N: int
    Y_max: float
    stretch: float
    nodes: np.ndarray
    dydx: np.ndarray
    d2ydx2: np.ndarray
    D1x: np.ndarray
    D2x: np.ndarray

    @property
    def size(self):
        return self.N + 1

    @cached_property
    def D1(self):
        return self.D1x / self.dydx[:, None]

    @cached_property
    def D2(self):
        yp = self.dydx
        return self.D2x / (yp**2)[:, None] - (self.d2ydx2 / yp**3)[:, None] * self.D1x

    @cached_property
    def J(self):
        """Cumulative integral from 0: (J f)(y_i) = int_0^{y_i} f."""
        return _cumulative_integration(self.N) * self.dydx[None, :]

    @cached_property
    def quad_weights(self):
        return self.J[-1].copy()

    @cached_property
    def Uy_matrix(self):
        """(Uy f)(y) = int_y^{Y_max} f."""
        return np.outer(np.ones(self.size), self.quad_weights) - self.J

    @cached_property
    def Vy_matrix(self):
        """(Vy f)(y) = int_0^y int_inf^{y'} f = -int_0^y Uy f."""
        return -self.J @ self.Uy_matrix

    @cached_property
    def V_row(self):
        return self.Vy_matrix[-1].copy()

    @cached_property
    def Vy_minus_matrix(self):
        """(Vy^- f)(y) = int_y^{Y_max} Uy f."""
        return self.Uy_matrix @ self.Uy_matrix

    @cached_property
    def Phi_matrix(self):
        """Green-kernel quadrature for Phi'' = f, Phi(0) = Phi(1) = 0."""
        y = self.nodes
        ones = np.ones(self.size)
        left = (y - 1.0)[:, None] * self.J * y[None, :]
        right = y[:, None] * (np.outer(ones, self.quad_weights) - self.J) * (y - 1.0)[None, :]
        return left + right

    @cached_property
    def Phi_wall_rows(self):
        """Rows giving (Phi'(0), Phi'(1)) = (int (y-1) f, int y f)."""
        w = self.quad_weights
        y = self.nodes
        return np.vstack([w * (y - 1.0), w * y])

    def integrate(self, f):
        return self.quad_weights @ f

    def l2_norm(self, f):
        return float(np.sqrt(abs(self.quad_weights @ (np.abs(f) ** 2))))

    def inner(self, f, g):
        """<f, g> = int f conj(g)."""
        return self.quad_weights @ (f * np.conj(g))


def build_grid(domain=Domain.HALF_LINE, N=512, Y_max=40.0, stretch=1.0):
    """Build a collocation grid with N + 1 nodes.

    ``stretch`` is the map length scale l: half the nodes sit in
    y < l Y_max / (Y_max + l) roughly, so smaller values resolve thinner
    boundary layers.
    """
    domain = Domain(domain)
    N = int(N)
    if N < 16:
        raise ConfigurationError("N must be at least 16")
    xd, DM = chebdif(N, 2)
    x = xd[::-1].copy()
    D1x = DM[0][::-1, ::-1].copy()
    D2x = DM[1][::-1, ::-1].copy()
    x[0], x[-1] = -1.0, 1.0

    if domain is Domain.HALF_LINE:
        if Y_max is None or not np.isfinite(Y_max) or Y_max < 20:
            raise ConfigurationError("Y_max must be at least 20 on the half line")
        if stretch is None or not stretch > 0:
            raise ConfigurationError("stretch must be positive")
        ell = float(stretch)
        b = 1.0 + 2.0 * ell / Y_max
        y = ell * (1.0 + x) / (b - x)
        dydx = ell * (1.0 + b) / (b - x) ** 2
        d2 = 2.0 * ell * (1.0 + b) / (b - x) ** 3
        y[0], y[-1] = 0.0, float(Y_max)
        Y_max = float(Y_max)
    else:
        y = 0.5 * (1.0 + x)
        dydx = np.full_like(x, 0.5)
        d2 = np.zeros_like(x)
        y[0], y[-1] = 0.0, 1.0
        Y_max, ell = 1.0, float("nan")
    return Grid(domain, N, Y_max, ell, y, dydx, d2, D1x, D2x)


# Operator functions acting on nodal values.

def op_U(grid, f):
    return grid.quad_weights @ f


def op_Uy(grid, f):
    return grid.Uy_matrix @ f


def op_V(grid, f):
    return grid.V_row @ f


def op_Vy(grid, f):
    return grid.Vy_matrix @ f


def op_Vy_minus(grid, f):
    return grid.Vy_minus_matrix @ f


def op_Phi(grid, f):
    if grid.domain is not Domain.UNIT_INTERVAL:
        raise ConfigurationError("stream function needs a unit-interval grid")
    return grid.Phi_matrix @ f


def op_Phi_collocation(grid, f):
    """Stream function by collocation: D2 Phi = f with Dirichlet rows."""
    A = grid.D2.astype(complex if np.iscomplexobj(f) else float)
    rhs = np.array(f, dtype=A.dtype)
    A[0] = 0.0
    A[0, 0] = 1.0
    A[-1] = 0.0
    A[-1, -1] = 1.0
    rhs[0] = rhs[-1] = 0.0
    return np.linalg.solve(A, rhs)


def hns_U(grid, f):
    """(Phi'(0), Phi'(1)) for the stream function of f."""
    return grid.Phi_wall_rows @ f
