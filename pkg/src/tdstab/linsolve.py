"""Dense complex linear solves with a one-norm condition estimate.

Factorization is LAPACK getrf (partial pivoting) through scipy, applied to
the row-equilibrated matrix diag(r) A with r_i = 1 / max_j |a_ij|. Collocation
rows for second derivatives are many orders of magnitude larger than
boundary or constraint rows, and equilibration keeps the condition estimate
meaningful. The condition number of the scaled matrix is estimated with
Hager's method, which needs only solves with it and its adjoint.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class SolverError(RuntimeError):
    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


@dataclass
class ComplexSystem:
    """Square system with optional row tags ("interior", "boundary", ...)."""

    matrix: np.ndarray
    rhs: np.ndarray
    row_tags: list = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix)
        self.rhs = np.asarray(self.rhs)
        n, m = self.matrix.shape
        if n != m:
            raise ValueError("matrix must be square")
        if self.rhs.shape[0] != n:
            raise ValueError("rhs length does not match matrix")
        if self.row_tags is not None and len(self.row_tags) != n:
            raise ValueError("one tag per row")


@dataclass
class Solution:
    x: np.ndarray
    condition: float
    residual: float
    backward_error: float


class Factorization:
    """LU factors of A, reusable for several right-hand sides."""

    def __init__(self, A, max_cond=None):
        A = np.asarray(A)
        if A.size and np.all(np.isfinite(A)):
            rmax = np.abs(A).max(axis=1)
            if np.any(rmax == 0):
                raise SolverError("matrix has a zero row", float("inf"))
            # powers of two keep the scaling exact
            self.row_scale = 2.0 ** -np.round(np.log2(rmax))
            A = A * self.row_scale[:, None]
        self.A = A
        self.norm1 = float(np.abs(A).sum(axis=0).max()) if A.size else 0.0
        if A.size == 0 or not np.all(np.isfinite(A)):
            raise SolverError("matrix has non-finite entries")
        lu, piv, info = sla.lapack.get_lapack_funcs("getrf", (A,))(A)
        if info > 0:
            raise SolverError(f"exactly singular pivot at column {info}", float("inf"))
        self.lu, self.piv = lu, piv
        self.condition = self._estimate_condition()
        limit = max_cond if max_cond is not None else 1.0 / np.finfo(float).eps
        if not np.isfinite(self.condition) or self.condition > limit:
            raise SolverError(
                f"matrix singular to working precision (cond ~ {self.condition:.3e})",
                self.condition,
            )

    def solve(self, b):
        b = np.asarray(b)
        scale = self.row_scale if b.ndim == 1 else self.row_scale[:, None]
        return self._solve_scaled(b * scale)

    def _solve_scaled(self, b, trans=0):
        return sla.lu_solve((self.lu, self.piv), b, trans=trans, check_finite=False)

    def _estimate_condition(self, iters=8):
        # Hager / Higham estimate of ||A^{-1}||_1
        n = self.A.shape[0]
        cplx = np.iscomplexobj(self.A)
        x = np.full(n, 1.0 / n, dtype=complex if cplx else float)
        est = 0.0
        last = -1
        for _ in range(iters):
            y = self._solve_scaled(x)
            new = float(np.abs(y).sum())
            if not np.isfinite(new):
                return float("inf")
            if new <= est:
                break
            est = new
            if cplx:
                ay = np.abs(y)
                xi = np.where(ay > 0, y / np.where(ay > 0, ay, 1.0), 1.0)
            else:
                xi = np.where(y >= 0, 1.0, -1.0)
            z = self._solve_scaled(xi, trans=2 if cplx else 1)
            j = int(np.argmax(np.abs(z)))
            if j == last:
                break
            last = j
            x = np.zeros_like(x)
            x[j] = 1.0
        return est * self.norm1


def solve(system, b=None, max_cond=None):
    """Solve ``system`` (a ComplexSystem or a bare matrix plus ``b``).

    Returns a :class:`Solution` holding x, the one-norm condition estimate,
    the relative residual ||Ax - b|| / ||b|| and the normwise backward error
    ||Ax - b|| / (||A|| ||x|| + ||b||), all in the infinity norm.
    """
    if isinstance(system, ComplexSystem):
        A, rhs = system.matrix, system.rhs
    else:
        A, rhs = np.asarray(system), np.asarray(b)
    fac = Factorization(A, max_cond=max_cond)
    x = fac.solve(rhs)
    r = A @ x - rhs
    rn = float(np.abs(r).max()) if r.size else 0.0
    bn = float(np.abs(rhs).max()) if rhs.size else 0.0
    xn = float(np.abs(x).max()) if x.size else 0.0
    An = float(np.abs(A).sum(axis=1).max())
    residual = rn / bn if bn > 0 else rn
    backward = rn / (An * xn + bn) if (An * xn + bn) > 0 else 0.0
    return Solution(x, fac.condition, residual, backward)
