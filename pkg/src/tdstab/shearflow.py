"""Background shear profiles U_s, V_s = y + U_s and the modified concavity weight.

All profiles are closed form with hand-coded derivatives so that the
structural checks are exact up to rounding.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Domain(str, Enum):
    HALF_LINE = "HalfLine"
    UNIT_INTERVAL = "UnitInterval"


class FlowKind(str, Enum):
    EXP_CONCAVE = "ExpConcave"
    RATIONAL_CONCAVE = "RationalConcave"
    CHANNEL_CONCAVE = "ChannelConcave"
    INFLECTED_TEST = "InflectedTest"
    CUTOFF_LINEAR = "CutoffLinear"


class DomainError(ValueError):
    pass


class InvalidModeError(ValueError):
    pass


_DOMAINS = {
    FlowKind.EXP_CONCAVE: Domain.HALF_LINE,
    FlowKind.RATIONAL_CONCAVE: Domain.HALF_LINE,
    FlowKind.CHANNEL_CONCAVE: Domain.UNIT_INTERVAL,
    FlowKind.INFLECTED_TEST: Domain.HALF_LINE,
    FlowKind.CUTOFF_LINEAR: Domain.HALF_LINE,
}

_DEFAULT_PARAMS = {
    FlowKind.EXP_CONCAVE: {},
    FlowKind.RATIONAL_CONCAVE: {},
    FlowKind.CHANNEL_CONCAVE: {},
    FlowKind.INFLECTED_TEST: {"a": 1.0},
    FlowKind.CUTOFF_LINEAR: {"N": 64.0},
}


def _chi(xi):
    """Cutoff with chi(xi) = xi on [0, 1/4], 0 for xi >= 1, C^2 quintic between.

    Returns chi, chi', chi'', chi'''.
    """
    xi = np.asarray(xi, dtype=float)
    c0 = np.where(xi <= 0.25, xi, 0.0)
    c1 = np.where(xi <= 0.25, 1.0, 0.0)
    c2 = np.zeros_like(xi)
    c3 = np.zeros_like(xi)
    mid = (xi > 0.25) & (xi < 1.0)
    if np.any(mid):
        s = xi[mid] - 1.0
        coef = _QUINTIC
        # p(s) = s^3 (q0 + q1 s + q2 s^2), vanishes to second order at s = 0
        p = s**3 * (coef[0] + coef[1] * s + coef[2] * s**2)
        dp = 3 * s**2 * coef[0] + 4 * s**3 * coef[1] + 5 * s**4 * coef[2]
        d2p = 6 * s * coef[0] + 12 * s**2 * coef[1] + 20 * s**3 * coef[2]
        d3p = 6 * coef[0] + 24 * s * coef[1] + 60 * s**2 * coef[2]
        c0[mid], c1[mid], c2[mid], c3[mid] = p, dp, d2p, d3p
    return c0, c1, c2, c3


def _quintic_coefficients():
    # match value 1/4, slope 1, curvature 0 at xi = 1/4 (s = -3/4)
    s = -0.75
    rows = np.array([
        [s**3, s**4, s**5],
        [3 * s**2, 4 * s**3, 5 * s**4],
        [6 * s, 12 * s**2, 20 * s**3],
    ])
    return np.linalg.solve(rows, np.array([0.25, 1.0, 0.0]))


_QUINTIC = _quintic_coefficients()


@dataclass(frozen=True)
class ShearFlow:
    """A closed-form background profile.

    ``kind`` picks the formula, ``params`` holds profile constants
    (``a`` for InflectedTest, ``N`` for CutoffLinear).
    """

    kind: FlowKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = FlowKind(self.kind)
        object.__setattr__(self, "kind", kind)
        merged = dict(_DEFAULT_PARAMS[kind])
        merged.update(self.params or {})
        object.__setattr__(self, "params", merged)

    @classmethod
    def from_name(cls, name, **params):
        try:
            kind = FlowKind(name)
        except ValueError:
            raise ValueError(
                f"unknown profile {name!r}; expected one of "
                + ", ".join(k.value for k in FlowKind)
            ) from None
        return cls(kind, params)

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items()))))

    @property
    def domain(self):
        return _DOMAINS[self.kind]

    @property
    def name(self):
        return self.kind.value

    @property
    def is_concave_family(self):
        return self.kind is not FlowKind.INFLECTED_TEST

    def _check_domain(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or not np.all(np.isfinite(y)):
            raise DomainError("y must be finite and nonnegative")
        if self.domain is Domain.UNIT_INTERVAL and np.any(y > 1.0 + 1e-14):
            raise DomainError(f"{self.name} lives on [0, 1]")
        return y

    def eval(self, y):
        """Return (U_s, U_s', U_s'', U_s''') at ``y`` (scalar or array)."""
        y = self._check_domain(y)
        kind = self.kind
        if kind in (FlowKind.EXP_CONCAVE, FlowKind.CUTOFF_LINEAR):
            e = np.exp(-y)
            out = (1.0 - e, e, -e, e)
        elif kind is FlowKind.RATIONAL_CONCAVE:
            q = 1.0 / (1.0 + y)
            out = (y * q, q**2, -2.0 * q**3, 6.0 * q**4)
        elif kind is FlowKind.CHANNEL_CONCAVE:
            out = (4.0 * y * (1.0 - y), 4.0 - 8.0 * y,
                   -8.0 * np.ones_like(y), np.zeros_like(y))
        else:
            a = self.params["a"]
            e = np.exp(-y)
            out = (1.0 - (1.0 + a * y) * e,
                   (1.0 - a + a * y) * e,
                   (2.0 * a - 1.0 - a * y) * e,
                   (1.0 - 3.0 * a + a * y) * e)
        if np.ndim(y) == 0:
            return tuple(float(v) for v in out)
        return out

    def eval_V(self, y):
        """Return (V, V', V'') of the advecting profile.

        V = y + U_s on the half line, V = N chi(y/N) + U_s for the cutoff
        flow, and V = U_s on the channel.
        """
        U, U1, U2, _ = self.eval(y)
        y = np.asarray(y, dtype=float)
        if self.domain is Domain.UNIT_INTERVAL:
            return U, U1, U2
        if self.kind is FlowKind.CUTOFF_LINEAR:
            N = self.params["N"]
            c0, c1, c2, _ = _chi(y / N)
            V = (N * c0 + U, c1 + U1, c2 / N + U2)
        else:
            V = (y + U, 1.0 + U1, U2)
        if np.ndim(y) == 0:
            return tuple(float(v) for v in V)
        return V

    def limit_at_infinity(self):
        if self.domain is Domain.UNIT_INTERVAL:
            return None
        return 1.0


def weight_usk(flow, k, y):
    """Modified concavity weight U_s'' - |k|^{-2/3} (1+y)^{-6}."""
    if k == 0:
        raise InvalidModeError("weight undefined at k = 0")
    _, _, U2, _ = flow.eval(y)
    return U2 - abs(k) ** (-2.0 / 3.0) * (1.0 + np.asarray(y, dtype=float)) ** -6


def weight_usk_prime(flow, k, y):
    """y-derivative of :func:`weight_usk`."""
    _, _, _, U3 = flow.eval(y)
    return U3 + 6.0 * abs(k) ** (-2.0 / 3.0) * (1.0 + np.asarray(y, dtype=float)) ** -7


@dataclass
class AssumptionReport:
    flow: str
    checks: dict
    failing_y: dict
    lower_constant: float = float("nan")
    upper_constant: float = float("nan")
    k: float = float("nan")

    @property
    def ok(self):
        return all(self.checks.values())

    def as_dict(self):
        return {
            "flow": self.flow,
            "ok": self.ok,
            "checks": dict(self.checks),
            "failing_y": {key: [float(v) for v in vals]
                          for key, vals in self.failing_y.items()},
            "k": self.k,
            "lower_constant": self.lower_constant,
            "upper_constant": self.upper_constant,
        }


def check_assumptions(flow, grid, k=8.0):
    """Evaluate the structural assumptions pointwise on the grid nodes.

    On a truncated grid every supremum is finite, so the decay condition is
    tested as "the (1+y)^6 |U_s''| envelope does not grow over the outer half
    of the grid" and the ratio condition as "|U_s'''/U_s''| stays below
    1e6 wherever it is defined".
    """
    y = grid.nodes
    U, U1, U2, U3 = flow.eval(y)
    checks = {}
    failing = {}

    bad = y[U2 >= 0]
    checks["concavity"] = bad.size == 0
    failing["concavity"] = bad.tolist()

    checks["wall_value"] = abs(U[0]) <= 1e-14
    failing["wall_value"] = [] if checks["wall_value"] else [0.0]

    if flow.domain is Domain.HALF_LINE:
        env = (1.0 + y) ** 6 * np.abs(U2)
        inner = env[y <= 0.5 * y[-1]]
        outer = env[y > 0.5 * y[-1]]
        grows = outer > inner.max() * (1.0 + 1e-12)
        checks["decay"] = not np.any(grows)
        failing["decay"] = y[y > 0.5 * y[-1]][grows].tolist()

        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(U3 / U2)
        big = ~np.isfinite(ratio) | (ratio > 1e6)
        checks["ratio"] = not np.any(big)
        failing["ratio"] = y[big].tolist()

        checks["normalization"] = flow.limit_at_infinity() == 1.0
        failing["normalization"] = []

    lower = upper = float("nan")
    if flow.domain is Domain.HALF_LINE and k:
        w = weight_usk(flow, k, y)
        # (1+y)^6 <= C / (-U''_{s,k}) and 1/(-U''_{s,k}) <= C' |k|^{2/3} (1+y)^6
        lower = float(np.max((1.0 + y) ** 6 * (-w)))
        upper = float(np.max(1.0 / (-w) / (abs(k) ** (2.0 / 3.0) * (1.0 + y) ** 6)))
        checks["sandwich"] = bool(np.all(w < 0)) and np.isfinite(lower)
        failing["sandwich"] = y[w >= 0].tolist()
    return AssumptionReport(flow.name, checks, failing, lower, upper, float(k))
