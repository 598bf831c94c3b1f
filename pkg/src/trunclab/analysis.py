"""Numerical backend: Dickman's rho, the extremal constant and bound diagnostics.

Diagnostics evaluate the *shape* of an asymptotic bound with every implied
constant dropped. They never assert an inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate

from ._nt import primes_list

EULER_GAMMA_STR = "0.57721566490153286061"
LOG2_STR = "0.69314718055994530942"
EULER_GAMMA = float(EULER_GAMMA_STR)
LOG2 = float(LOG2_STR)
KAPPA = 0.32867  # printed truncation of the Hall-Tenenbaum constant

RHO_DEGREE = 40
RHO_PICARD_TOL = 1e-17
RHO_MAX_ITER = 200
MIN_PRECISION = 1e-14


# ---------------------------------------------------------------- Dickman rho

@dataclass
class DickmanTable:
    """Piecewise Chebyshev representation of rho on [k, k+1], k = 1..u_max-1.

    Each piece solves u rho(u) = int_{u-1}^{u} rho(t) dt by Picard iteration,
    with the part of the integral on [u-1, k] taken from the previous piece.
    Antiderivatives of the interpolants are exact (Chebyshev integration).
    """

    u_max: int
    degree: int = RHO_DEGREE
    pieces: list = field(default_factory=list)  # Chebyshev coefficient arrays
    piece_errors: list = field(default_factory=list)
    error_bound: float = 0.0

    def __post_init__(self):
        if self.u_max < 1:
            raise ValueError("u_max must be >= 1")
        self._build()

    @property
    def step(self) -> float:
        return 1.0

    def _build(self) -> None:
        nodes = np.cos(np.pi * (np.arange(self.degree + 1) + 0.5) / (self.degree + 1))
        # piece 0 is [0, 1], where rho = 1
        self.pieces = [np.array([1.0])]
        self.piece_errors = [0.0]
        err = 0.0
        for k in range(1, self.u_max):
            prev = self.pieces[k - 1]
            prev_int = C.chebint(prev)  # in the variable s = 2(t - (k-1)) - 1
            u = k + (nodes + 1.0) / 2.0

            def prev_tail(uu):
                # int_{uu-1}^{k} rho = (1/2) [P(1) - P(s(uu-1))]
                return 0.5 * (C.chebval(1.0, prev_int) - C.chebval(2.0 * (uu - 1.0 - (k - 1)) - 1.0, prev_int))

            tail = prev_tail(u)
            cur = np.array([self.value_at_int(k)])
            change = math.inf
            for _ in range(RHO_MAX_ITER):
                cur_int = C.chebint(cur)
                head = 0.5 * (C.chebval(nodes, cur_int) - C.chebval(-1.0, cur_int))
                new = C.chebfit(nodes, (tail + head) / u, self.degree)
                change = float(np.max(np.abs(C.chebval(nodes, new) - C.chebval(nodes, cur))))
                cur = new
                if change < RHO_PICARD_TOL:
                    break
            trunc = float(np.sum(np.abs(cur[-4:])))
            # the integral operator has norm <= 1/2 on the new piece and passes
            # earlier errors through with weight <= 1
            local = 2.0 * (change + trunc) + 4.0 * np.finfo(float).eps
            err = err + local
            self.pieces.append(cur)
            self.piece_errors.append(float(err))
        self.error_bound = float(err)

    def value_at_int(self, k: int) -> float:
        if k <= 1:
            return 1.0
        return float(C.chebval(1.0, self.pieces[k - 1]))

    def __call__(self, u: float) -> float:
        if u < 0:
            raise ValueError("rho is defined here for u >= 0")
        if u <= 1.0:
            return 1.0
        if u >= self.u_max:
            raise ValueError(f"u = {u} beyond table range {self.u_max}")
        k = int(math.floor(u))
        return float(C.chebval(2.0 * (u - k) - 1.0, self.pieces[k]))

    def error_at(self, u: float) -> float:
        if u <= 1.0:
            return 0.0
        return self.piece_errors[min(int(math.floor(u)), len(self.piece_errors) - 1)]

    def integral(self, a: float, b: float, nodes: int = 32) -> float:
        """int_a^b rho by Gauss-Legendre on each unit piece (independent of the Picard step)."""
        if b < a:
            return -self.integral(b, a, nodes)
        xs, ws = np.polynomial.legendre.leggauss(nodes)
        total = 0.0
        lo = a
        while lo < b:
            hi = min(b, math.floor(lo) + 1.0)
            mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
            total += half * sum(w * self(mid + half * t) for t, w in zip(xs, ws))
            lo = hi
        return total

    def residual(self, u: float) -> float:
        """rho(u) - (1/u) int_{u-1}^u rho(t) dt."""
        if u <= 1.0:
            return 0.0
        return self(u) - self.integral(u - 1.0, u) / u


@lru_cache(maxsize=8)
def dickman_table(u_max: int = 20) -> DickmanTable:
    return DickmanTable(int(u_max))


def dickman_rho(u: float, precision: float = 1e-12) -> float:
    """rho(u), with a guaranteed table error bound no larger than precision."""
    if u < 0:
        raise ValueError("u must be >= 0")
    if precision < MIN_PRECISION:
        raise ValueError(f"precision must be >= {MIN_PRECISION}")
    if u <= 1.0:
        return 1.0
    table = dickman_table(max(20, int(math.floor(u)) + 2))
    if table.error_at(u) > precision:
        raise ValueError(f"rho({u}) cannot be certified to {precision}; table error {table.error_at(u):.3g}")
    return table(u)


def sigma_minus(xi: float) -> float:
    if xi < 0:
        raise ValueError("xi must be >= 0")
    return xi * dickman_rho(xi)


# ---------------------------------------------------------------- extremal constant

@dataclass(frozen=True)
class Theorem2Constant:
    inner: float
    full: float
    integral: float
    error: float

    def __iter__(self):
        return iter((self.inner, self.full))


def theorem2_constant(tol: float = 1e-12) -> Theorem2Constant:
    """inner = 1 - 2 log(1+sqrt e) + 4 int_1^{sqrt e} log t/(t+1) dt; full = inner log 2."""
    se = math.sqrt(math.e)
    val, est = integrate.quad(lambda t: math.log(t) / (t + 1.0), 1.0, se, epsabs=tol, epsrel=tol)
    inner = 1.0 - 2.0 * math.log1p(se) + 4.0 * val
    return Theorem2Constant(inner, inner * LOG2, val, 4.0 * est + 4 * np.finfo(float).eps)


# ---------------------------------------------------------------- bound diagnostics

@dataclass(frozen=True)
class BoundReport:
    name: str
    inputs: dict
    lhs: Optional[float]
    rhs_shape: float
    note: str
    values: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "inputs": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.inputs.items()},
            "lhs": self.lhs,
            "rhs_shape": self.rhs_shape,
            "note": self.note,
            "values": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.values.items()},
        }


def hildebrand_bound(u: float, x: float) -> BoundReport:
    if u < 0 or x < math.e:
        raise ValueError("need u >= 0 and x >= e")
    shape = math.exp(-u * math.exp(u / 2.0)) * math.log(x)
    return BoundReport("hildebrand35", {"u": u, "x": x}, None, shape,
                       "shape exp(-u e^{u/2}) log x; beta and implied constants unspecified")


def hall_tenenbaum_u(f, x: int) -> BoundReport:
    """u = sum_{p<=x} (1 - f(p))/p with the shape exp(-kappa u) and the measured mean."""
    from .multfunc import summatory

    if x > f.x_max:
        raise ValueError(f"x = {x} exceeds the assignment range {f.x_max}")
    if f.exact:
        u = sum((Fraction(1 - f[p], p) for p in primes_list(x)), Fraction(0))
    else:
        u = math.fsum((1.0 - float(f[p])) / p for p in primes_list(x))
    shape = math.exp(-KAPPA * float(u))
    measured = abs(float(summatory(f, x))) / x
    return BoundReport("halltenenbaum36", {"x": x}, measured, shape,
                       "kappa = 0.32867 as printed (truncated); implied constant unspecified",
                       {"u": u, "u_float": float(u)})


def lipschitz_check(f, x: int, w: int) -> tuple[BoundReport, BoundReport]:
    """Reports for ||F(x)| - |F(x/w)|| and |F(x) - F(x/w)|, F(t) = (1/t) sum_{n<=t} f(n)."""
    from .multfunc import mean_value

    if not 1 <= w <= x / 10:
        raise ValueError(f"need 1 <= w <= x/10 (x = {x}, w = {w})")
    mode = "exact" if f.exact else "float"
    Fx = mean_value(f, x, mode).value
    Fw = mean_value(f, Fraction(x, w) if mode == "exact" else x / w, mode).value
    ratio = math.log(2 * w) / math.log(x)
    lx = math.log(x)
    shape31 = ratio ** (1 - 2 / math.pi) * math.log(1 / ratio) + math.log(lx) / lx ** (2 - math.sqrt(3))
    shape32 = ratio**0.25
    inputs = {"x": x, "w": w}
    note = "implied constant unspecified; diagnostic only"
    r31 = BoundReport("lipschitz31", inputs, float(abs(abs(Fx) - abs(Fw))), shape31, note,
                      {"F_x": Fx, "F_x_over_w": Fw})
    r32 = BoundReport("lipschitz32", inputs, float(abs(Fx - Fw)), shape32, note,
                      {"F_x": Fx, "F_x_over_w": Fw})
    return r31, r32
