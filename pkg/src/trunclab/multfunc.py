"""Completely multiplicative and multiplicative functions with values in [-1, 1].

Value arrays returned by this module are indexed by n: ``arr[n]`` holds the
value at n for 1 <= n <= x and ``arr[0]`` is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Mapping, Optional, Union

import numpy as np

from ._nt import as_fraction, factorize, fraction_str, primes_list, signed_reciprocal_sum, spf_array

CLASSES = ("F", "F0", "F1")
_U = 2.0**-53

Number = Union[Fraction, float]


def _check_class_value(cls: str, p: int, v) -> None:
    if cls == "F1" and v not in (1, -1):
        raise ValueError(f"class F1 needs f({p}) in {{-1, 1}}, got {v}")
    if cls == "F0" and v not in (1, 0, -1):
        raise ValueError(f"class F0 needs f({p}) in {{-1, 0, 1}}, got {v}")
    if not -1 <= v <= 1:
        raise ValueError(f"f({p}) = {v} is outside [-1, 1]")


class _RuleValues(Mapping):
    """Read-only prime -> value view computed on demand."""

    def __init__(self, primes: tuple[int, ...], rule: Callable[[int], object]):
        self._primes = primes
        self._set = None
        self._rule = rule

    def __getitem__(self, p):
        if self._set is None:
            self._set = frozenset(self._primes)
        if p not in self._set:
            raise KeyError(p)
        return self._rule(p)

    def __iter__(self):
        return iter(self._primes)

    def __len__(self):
        return len(self._primes)


@dataclass(frozen=True)
class PrimeAssignment:
    """A completely multiplicative f given by f(p) for every prime p <= x_max."""

    x_max: int
    cls: str
    values: Mapping[int, Number]
    exact: bool = field(init=False)

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise ValueError(f"unknown class {self.cls!r}")
        if self.x_max < 1:
            raise ValueError("x_max must be >= 1")
        exact = True
        if not isinstance(self.values, _RuleValues):
            vals = {int(p): v for p, v in self.values.items()}
            if set(vals) != set(primes_list(self.x_max)):
                raise ValueError(f"keys must be exactly the primes <= {self.x_max}")
            for p, v in vals.items():
                if isinstance(v, float):
                    if self.cls != "F":
                        raise ValueError("float values are only accepted in class F")
                    exact = False
                else:
                    v = as_fraction(v)
                    vals[p] = v
                _check_class_value(self.cls, p, v)
            object.__setattr__(self, "values", vals)
        object.__setattr__(self, "exact", exact)

    # construction helpers
    @classmethod
    def from_rule(cls, x_max: int, klass: str, rule: Callable[[int], Number]) -> "PrimeAssignment":
        return cls(x_max, klass, {p: rule(p) for p in primes_list(x_max)})

    @classmethod
    def constant(cls, x_max: int, value, klass: Optional[str] = None) -> "PrimeAssignment":
        value = as_fraction(value) if not isinstance(value, float) else value
        if klass is None:
            klass = "F1" if value in (1, -1) else ("F0" if value == 0 else "F")
        return cls.from_rule(x_max, klass, lambda p: value)

    @classmethod
    def liouville(cls, x_max: int) -> "PrimeAssignment":
        """All primes -1, so f = lambda."""
        return cls.constant(x_max, -1, "F1")

    @classmethod
    def ones(cls, x_max: int) -> "PrimeAssignment":
        return cls.constant(x_max, 1, "F1")

    def __getitem__(self, p: int) -> Number:
        return self.values[p]

    @property
    def primes(self) -> tuple[int, ...]:
        return primes_list(self.x_max)

    @property
    def integral(self) -> bool:
        return self.exact and all(v.denominator == 1 for v in self.values.values())

    def with_values(self, updates: Mapping[int, Number], cls: Optional[str] = None) -> "PrimeAssignment":
        vals = dict(self.values)
        vals.update(updates)
        return PrimeAssignment(self.x_max, cls or self.cls, vals)

    def extend(self, x_max: int, values: Mapping[int, Number], cls: Optional[str] = None) -> "PrimeAssignment":
        """A larger assignment agreeing with self on the primes <= self.x_max."""
        vals = dict(self.values)
        vals.update(values)
        return PrimeAssignment(x_max, cls or self.cls, vals)

    def restrict(self, x_max: int) -> "PrimeAssignment":
        keep = set(primes_list(x_max))
        return PrimeAssignment(x_max, self.cls, {p: v for p, v in self.values.items() if p in keep})

    def sign_key(self) -> tuple:
        """Lexicographic key: primes ascending, values compared as numbers (-1 < 0 < +1)."""
        return tuple(self.values[p] for p in self.primes)

    def to_json(self) -> dict:
        if not self.exact:
            raise ValueError("float-valued assignments have no exact JSON form")
        return {
            "x_max": self.x_max,
            "class": self.cls,
            "primes": {str(p): fraction_str(self.values[p]) for p in self.primes},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PrimeAssignment":
        try:
            vals = {int(p): as_fraction(str(v)) for p, v in obj["primes"].items()}
            return cls(int(obj["x_max"]), str(obj["class"]), vals)
        except (KeyError, TypeError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed assignment: {exc}") from exc


@dataclass(frozen=True)
class MultSpec:
    """A multiplicative f* given by f*(p^k) for every prime power p^k <= x_max.

    ``rule(p, k)``, when given, defines values at prime powers above x_max;
    only the h-transform's tail ever looks there.
    """

    x_max: int
    values: Mapping[int, tuple]
    rule: Optional[Callable[[int, int], Fraction]] = None

    def __post_init__(self):
        if self.x_max < 1:
            raise ValueError("x_max must be >= 1")
        if isinstance(self.values, _RuleValues):
            return
        vals = {}
        for p, seq in self.values.items():
            p = int(p)
            vals[p] = tuple(as_fraction(v) for v in seq)
        if set(vals) != set(primes_list(self.x_max)):
            raise ValueError(f"keys must be exactly the primes <= {self.x_max}")
        for p, seq in vals.items():
            if len(seq) != _max_exp(p, self.x_max):
                raise ValueError(f"prime {p} needs {_max_exp(p, self.x_max)} prime-power values, got {len(seq)}")
            for k, v in enumerate(seq, 1):
                if not -1 <= v <= 1:
                    raise ValueError(f"f*({p}^{k}) = {v} is outside [-1, 1]")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_rule(cls, x_max: int, rule: Callable[[int, int], object], lazy: bool = False) -> "MultSpec":
        def frule(p, k):
            return as_fraction(rule(p, k))

        if lazy:
            view = _RuleValues(primes_list(x_max), lambda p: tuple(frule(p, k) for k in range(1, _max_exp(p, x_max) + 1)))
            return cls(x_max, view, frule)
        vals = {p: tuple(frule(p, k) for k in range(1, _max_exp(p, x_max) + 1)) for p in primes_list(x_max)}
        return cls(x_max, vals, frule)

    @classmethod
    def from_cm(cls, f: PrimeAssignment) -> "MultSpec":
        """f*(p^k) = f(p)^k on prime powers <= f.x_max; no continuation rule."""
        base = cls.from_rule(f.x_max, lambda p, k: f[p] ** k)
        return cls(f.x_max, base.values)

    def value(self, p: int, k: int) -> Fraction:
        if k == 0:
            return Fraction(1)
        if p ** k <= self.x_max:
            return self.values[p][k - 1]
        if self.rule is None:
            raise KeyError(f"f*({p}^{k}) is beyond x_max and no continuation rule is set")
        return self.rule(p, k)

    def associated_cm(self) -> PrimeAssignment:
        """The completely multiplicative f with f(p) = f*(p)."""
        return PrimeAssignment(self.x_max, "F", {p: self.values[p][0] for p in primes_list(self.x_max)})

    def to_json(self) -> dict:
        primes = primes_list(self.x_max)
        return {
            "x_max": self.x_max,
            "class": "F*",
            "primes": {str(p): fraction_str(self.values[p][0]) for p in primes},
            "prime_powers": {str(p): [fraction_str(v) for v in self.values[p]] for p in primes},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MultSpec":
        try:
            vals = {int(p): tuple(as_fraction(str(v)) for v in seq) for p, seq in obj["prime_powers"].items()}
            return cls(int(obj["x_max"]), vals)
        except (KeyError, TypeError, ZeroDivisionError) as exc:
            raise ValueError(f"malformed multiplicative spec: {exc}") from exc


def load_function(obj: dict):
    """PrimeAssignment or MultSpec from its JSON form."""
    return MultSpec.from_json(obj) if "prime_powers" in obj else PrimeAssignment.from_json(obj)


def _max_exp(p: int, x: int) -> int:
    k, pk = 0, p
    while pk <= x:
        k += 1
        pk *= p
    return k


@lru_cache(maxsize=4)
def _pp_decomposition(x: int):
    """For n <= x: q[n] = p^v_p(n) with p = spf(n), rest[n] = n // q[n], and the
    distinct-prime-factor level of n used to order multiplicative fills."""
    n = np.arange(x + 1, dtype=np.int64)
    spf = spf_array(x)
    q = spf.copy()
    q[:2] = 1
    m = n.copy()
    m[2:] //= spf[2:]
    active = np.flatnonzero(n >= 2)
    while active.size:
        p = spf[active]
        hit = m[active] % p == 0
        active = active[hit]
        q[active] *= spf[active]
        m[active] //= spf[active]
    rest = n.copy()
    rest[1:] //= q[1:]
    rest[0] = 0
    level = np.zeros(x + 1, dtype=np.int64)
    while True:
        new = level.copy()
        new[2:] = level[rest[2:]] + 1
        if np.array_equal(new, level):
            break
        level = new
    order = [np.flatnonzero(level == k) for k in range(1, int(level.max()) + 1)] if x >= 2 else []
    for arr in (q, rest):
        arr.setflags(write=False)
    return q, rest, order


def multiplicative_array(x: int, pp_values: np.ndarray) -> np.ndarray:
    """Fill a multiplicative function from its prime-power values.

    pp_values is dense of length x + 1 with pp_values[p^k] = value; it may
    hold ints, floats or Fractions (object dtype).
    """
    out = np.zeros(x + 1, dtype=pp_values.dtype)
    if x < 1:
        return out
    out[1] = 1
    q, rest, order = _pp_decomposition(x)
    for idx in order:
        out[idx] = pp_values[q[idx]] * out[rest[idx]]
    return out


def _prime_powers(x: int) -> Iterator[tuple[int, int, int]]:
    for p in primes_list(x):
        pk, k = p, 1
        while pk <= x:
            yield p, k, pk
            pk *= p
            k += 1


def eval_cm(f: PrimeAssignment, n: int) -> Number:
    if not 1 <= n <= f.x_max:
        raise ValueError(f"n={n} outside 1..{f.x_max}")
    out = Fraction(1) if f.exact else 1.0
    m = n
    spf = spf_array(f.x_max)
    while m > 1:
        p = int(spf[m])
        out *= f[p]
        m //= p
    return out


def cm_array(f: PrimeAssignment, x: int, exact: Optional[bool] = None) -> np.ndarray:
    """f(n) for n <= x.

    Integral assignments give int8; exact=True gives Fractions (object dtype);
    otherwise float64.
    """
    _check_range(f, x)
    if exact is None:
        exact = f.exact
    if exact and not f.exact:
        raise ValueError("exact evaluation needs rational prime values")
    if f.integral:
        out = np.ones(x + 1, dtype=np.int8)
        out[0] = 0
        for p in primes_list(x):
            a = int(f[p])
            if a == 1:
                continue
            pk = p
            while pk <= x:
                out[pk::pk] *= a
                pk *= p
        return out
    if exact:
        pp = np.zeros(x + 1, dtype=object)
        pp[:] = Fraction(0)
        for p, k, pk in _prime_powers(x):
            pp[pk] = f[p] ** k
        return multiplicative_array(x, pp)
    out = np.ones(x + 1, dtype=np.float64)
    out[0] = 0.0
    for p in primes_list(x):
        a = float(f[p])
        if a == 1.0:
            continue
        pk = p
        while pk <= x:
            out[pk::pk] *= a
            pk *= p
    return out


def mult_array(fstar: MultSpec, x: int, exact: bool = True) -> np.ndarray:
    """f*(n) for n <= x (object dtype with Fractions, or float64)."""
    if not 1 <= x <= fstar.x_max:
        raise ValueError(f"x={x} outside 1..{fstar.x_max}")
    pp = np.zeros(x + 1, dtype=object if exact else np.float64)
    if exact:
        pp[:] = Fraction(0)
    for p, k, pk in _prime_powers(x):
        v = fstar.value(p, k)
        pp[pk] = v if exact else float(v)
    return multiplicative_array(x, pp)


def _check_range(f, x: int) -> None:
    if not 1 <= x <= f.x_max:
        raise ValueError(f"x={x} outside 1..{f.x_max}")


@dataclass(frozen=True)
class ExactSum:
    """A truncated-sum value: an exact rational, or a float with a proven error bound."""

    mode: str
    value: Number
    error_bound: float = 0.0

    def __float__(self) -> float:
        return float(self.value)

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    def encloses(self, true_value) -> bool:
        if self.is_exact:
            return Fraction(self.value) == Fraction(true_value)
        return abs(Fraction(self.value) - Fraction(true_value)) <= Fraction(self.error_bound)

    def to_str(self) -> str:
        return fraction_str(self.value) if self.is_exact else repr(float(self.value))

    def to_json(self) -> dict:
        return {"mode": self.mode, "value": self.to_str(), "error_bound": repr(float(self.error_bound))}


def _is_integral_array(arr: np.ndarray) -> bool:
    return arr.dtype.kind in "iu"


def _exact_weighted_sum(vals: np.ndarray, x: int, power: bool) -> Fraction:
    """Sum of vals[n]/n (power=True) or of vals[n] (power=False), exactly."""
    if _is_integral_array(vals):
        if power:
            return signed_reciprocal_sum(vals, x)
        return Fraction(int(vals[1 : x + 1].astype(np.int64).sum()))
    total = Fraction(0)
    if power:
        for n in range(1, x + 1):
            v = vals[n]
            if v:
                total += Fraction(v) / n
    else:
        for n in range(1, x + 1):
            total += vals[n]
    return total


def _float_sum(vals: np.ndarray, x: int, power: bool, depth: int) -> ExactSum:
    """fsum of vals[n]/n with a bound covering value rounding (depth roundings
    per value), the division, and the final correctly rounded sum."""
    v = np.asarray(vals[1 : x + 1], dtype=np.float64)
    terms = v / np.arange(1, x + 1, dtype=np.float64) if power else v
    total = math.fsum(terms.tolist())
    abs_sum = math.fsum(np.abs(terms).tolist())
    rel = (depth + 2) * _U * 1.01
    bound = rel * abs_sum * 1.01 + _U * abs(total)
    return ExactSum("float", total, bound)


def _values_for(f, x: int, mode: str) -> tuple[np.ndarray, int]:
    """Value array plus the number of float roundings per entry."""
    exact = mode == "exact"
    depth = int(math.log2(x)) + 2 if x > 1 else 1
    if isinstance(f, MultSpec):
        _check_range(f, x)
        return mult_array(f, x, exact=exact), depth
    _check_range(f, x)
    if exact and not f.exact:
        raise ValueError("exact mode needs rational prime values; use mode='float'")
    if f.integral:
        return cm_array(f, x), 0
    return cm_array(f, x, exact=exact), depth


def truncated_sum(f, x: int, mode: str = "exact") -> ExactSum:
    """S_f(x) = sum_{n<=x} f(n)/n for a PrimeAssignment or MultSpec."""
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    vals, depth = _values_for(f, x, mode)
    if mode == "exact":
        return ExactSum("exact", _exact_weighted_sum(vals, x, power=True))
    return _float_sum(vals, x, True, depth)


def mean_value(f, x, mode: str = "exact") -> ExactSum:
    """F(x) = (1/x) sum_{n<=x} f(n); x may be a positive rational."""
    x = Fraction(x) if mode == "exact" or not isinstance(x, float) else x
    top = math.floor(x)
    if x <= 0:
        raise ValueError("x must be positive")
    if top < 1:
        return ExactSum(mode, Fraction(0) if mode == "exact" else 0.0)
    vals, depth = _values_for(f, top, mode)
    if mode == "exact":
        return ExactSum("exact", _exact_weighted_sum(vals, top, power=False) / x)
    s = _float_sum(vals, top, False, depth)
    fx = float(x)
    return ExactSum("float", s.value / fx, s.error_bound / fx + _U * abs(s.value / fx))


def summatory(f, x: int) -> Number:
    """sum_{n<=x} f(n), exact when f is."""
    vals, _ = _values_for(f, x, "exact")
    return _exact_weighted_sum(vals, x, power=False)


def divisor_transform(f: PrimeAssignment, x: int, mode: str = "exact") -> np.ndarray:
    """g(n) = sum_{d|n} f(d) for n <= x, built from g(p^k) = sum_{i<=k} f(p)^i.

    Prime-power values are always formed exactly; mode='float' converts them
    (sign-preserving) before the multiplicative fill.
    """
    _check_range(f, x)
    if not f.exact:
        raise ValueError("divisor_transform needs rational prime values")
    cache: dict[tuple[Fraction, int], Fraction] = {}

    def geom(a: Fraction, k: int) -> Fraction:
        key = (a, k)
        if key not in cache:
            cache[key] = sum((a**i for i in range(k + 1)), Fraction(0))
        return cache[key]

    if mode == "exact":
        pp = np.zeros(x + 1, dtype=object)
        pp[:] = Fraction(0)
        for p, k, pk in _prime_powers(x):
            pp[pk] = geom(f[p], k)
    else:
        pp = np.zeros(x + 1, dtype=np.float64)
        for p, k, pk in _prime_powers(x):
            pp[pk] = float(geom(f[p], k))
    return multiplicative_array(x, pp)


@dataclass(frozen=True)
class HSeries:
    """h with f* = h * f (Dirichlet convolution) and its constants H0, H1.

    H0 and H1 are evaluated through the Euler product over primes, with each
    local series cut at p^k <= truncation_bound; the tails are bounded using
    |h(p^k)| <= 2.
    """

    h_values: dict[int, Fraction]  # prime power -> h, for p^k <= truncation_bound with p^2 <= bound
    local: dict[int, Fraction]  # p -> sum_k h(p^k)/p^k (k >= 0)
    local_weighted: dict[int, Fraction]  # p -> sum_k k h(p^k)/p^k
    H0: Fraction
    H1: float
    truncation_bound: int
    H0_tail_bound: float
    H1_tail_bound: float

    def h(self, d: int) -> Fraction:
        out = Fraction(1)
        for p, e in factorize(d):
            if e == 1:
                return Fraction(0)
            pk = p**e
            if pk not in self.h_values:
                raise KeyError(f"h({p}^{e}) beyond the truncation bound")
            out *= self.h_values[pk]
        return out


def h_prime_power(fstar: MultSpec, p: int, k: int) -> Fraction:
    """h(p^k) = f*(p^k) - f(p) f*(p^{k-1})."""
    if k == 0:
        return Fraction(1)
    return fstar.value(p, k) - fstar.value(p, 1) * fstar.value(p, k - 1)


def h_transform(fstar: MultSpec, truncation_bound: Optional[int] = None) -> HSeries:
    bound = truncation_bound if truncation_bound is not None else max(fstar.x_max, 10**6)
    if fstar.rule is None:
        bound = min(bound, fstar.x_max)
    h_values: dict[int, Fraction] = {}
    local: dict[int, Fraction] = {}
    weighted: dict[int, Fraction] = {}
    tails: dict[int, float] = {}
    wtails: dict[int, float] = {}
    for p in primes_list(math.isqrt(bound)):
        L = Fraction(1)
        M = Fraction(0)
        pk, k = p, 1
        while pk <= bound:
            hv = h_prime_power(fstar, p, k)
            h_values[pk] = hv
            L += hv / pk
            M += k * hv / pk
            pk *= p
            k += 1
        local[p], weighted[p] = L, M
        # sum_{j>=k} 2 p^-j  and  sum_{j>=k} 2 j p^-j, with pk = p^k
        r = 1.0 / p
        tails[p] = 2.0 / pk / (1 - r)
        wtails[p] = 2.0 / pk * (k / (1 - r) + r / (1 - r) ** 2)
    H0 = Fraction(1)
    for L in local.values():
        H0 *= L
    # primes p > sqrt(bound): every h(p^k), k >= 2, lies in the tail
    s = math.isqrt(bound)
    big = 2.0 / max(s, 1)
    big_w = 4.0 * (math.log(max(s, 2)) + 2.0) / max(s - 1, 1)
    absL = {p: abs(float(L)) for p, L in local.items()}
    up = {p: absL[p] + tails[p] for p in local}
    prod_up = math.prod(up.values()) * math.exp(big)
    prod_abs = math.prod(absL.values())
    H0_tail = (prod_up - prod_abs) * (1 + 1e-12) + 1e-300
    # H1 = -sum h(d) log d / d = sum_p (-log p * M_p) prod_{q != p} L_q
    H1 = 0.0
    H1_tail = 0.0
    primes = list(local)
    for p in primes:
        others = math.prod(float(local[q]) for q in primes if q != p)
        others_up = math.prod(up[q] for q in primes if q != p) * math.exp(big)
        others_abs = math.prod(absL[q] for q in primes if q != p)
        lp = math.log(p)
        term = -lp * float(weighted[p])
        H1 += term * others
        H1_tail += lp * wtails[p] * others_up + abs(term) * (others_up - others_abs)
    H1_tail += big_w * prod_up
    return HSeries(h_values, local, weighted, H0, H1, bound, H0_tail, H1_tail * (1 + 1e-12))


def convolution_check(fstar: MultSpec, x: int) -> tuple[bool, Fraction]:
    """Check f*(n) = sum_{d|n} h(d) f(n/d) exactly for all n <= x.

    Returns (holds, max |deviation|).
    """
    if not 1 <= x <= fstar.x_max:
        raise ValueError(f"x={x} outside 1..{fstar.x_max}")
    lhs = mult_array(fstar, x, exact=True)
    pp_f = np.zeros(x + 1, dtype=object)
    pp_h = np.zeros(x + 1, dtype=object)
    pp_f[:] = Fraction(0)
    pp_h[:] = Fraction(0)
    for p, k, pk in _prime_powers(x):
        pp_f[pk] = fstar.value(p, 1) ** k
        pp_h[pk] = h_prime_power(fstar, p, k)
    f_vals = multiplicative_array(x, pp_f)
    h_vals = multiplicative_array(x, pp_h)
    conv = np.zeros(x + 1, dtype=object)
    conv[:] = Fraction(0)
    for d in range(1, x + 1):
        hd = h_vals[d]
        if hd:
            conv[d::d] += hd * f_vals[1 : x // d + 1]
    dev = max((abs(conv[n] - lhs[n]) for n in range(1, x + 1)), default=Fraction(0))
    return dev == 0, dev


