"""Minimizing S_f(x) = sum_{n<=x} f(n)/n over the classes F1, F0 and F.

Exact searches work with integer numerators over D = lcm(1..x). Floats are
used only to discard candidates and subtrees, always with a margin far above
the worst-case rounding, and every reported value is recomputed exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ._nt import BudgetExceeded, factorize, lcm_upto, primes_list
from .multfunc import ExactSum, PrimeAssignment, cm_array, truncated_sum

BRUTE_MAX_PRIMES = 28
BRUTE0_MAX_ASSIGNMENTS = 3**15
# float screening margin; rounding error of any objective here is < 1e-12
_MARGIN = 1e-9
_CHUNK = 1 << 16


@dataclass(frozen=True)
class BnBConfig:
    node_budget: int = 10**7
    parallel_width: int = 1
    tie_break: str = "lex"  # lexicographically least, primes ascending, -1 < 0 < +1
    split_depth: int = 3

    def __post_init__(self):
        if self.node_budget < 1:
            raise ValueError("node_budget must be >= 1")
        if self.parallel_width < 1:
            raise ValueError("parallel_width must be >= 1")
        if self.tie_break != "lex":
            raise ValueError("only the 'lex' tie-break rule is supported")


@dataclass(frozen=True)
class MinResult:
    x: int
    cls: str
    value: ExactSum
    minimizer: PrimeAssignment
    method: str
    certificate: str
    nodes_visited: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        mini = (self.minimizer.to_json() if self.minimizer.exact else
                {"x_max": self.minimizer.x_max, "class": self.minimizer.cls,
                 "primes": {str(p): repr(float(v)) for p, v in self.minimizer.values.items()}})
        return {
            "x": self.x,
            "class": self.cls,
            "method": self.method,
            "value": self.value.to_str(),
            "value_float": repr(float(self.value)),
            "error_bound": repr(float(self.value.error_bound)),
            "minimizer": mini,
            "certificate": self.certificate,
            "nodes_visited": self.nodes_visited,
        }


def _x_assignment(x: int, signs: dict[int, int], cls: str = "F1") -> PrimeAssignment:
    return PrimeAssignment(max(x, 1), cls, {p: Fraction(signs[p]) for p in primes_list(x)})


def _trivial(x: int, cls: str, method: str) -> MinResult:
    return MinResult(1, cls, ExactSum("exact", Fraction(1)), PrimeAssignment(1, cls, {}), method, "global")


class _Structure:
    """Per-x tables: for each n <= x its odd-exponent and support masks over the primes."""

    def __init__(self, x: int):
        self.x = x
        self.primes = primes_list(x)
        index = {p: i for i, p in enumerate(self.primes)}
        self.odd = np.zeros(x + 1, dtype=np.int64)
        self.support = np.zeros(x + 1, dtype=np.int64)
        for n in range(2, x + 1):
            o = s = 0
            for p, e in factorize(n):
                bit = 1 << index[p]
                s |= bit
                if e & 1:
                    o |= bit
            self.odd[n], self.support[n] = o, s
        self.D = lcm_upto(x)
        self.num = [0] + [self.D // n for n in range(1, x + 1)]
        self.recip = np.zeros(x + 1)
        self.recip[1:] = 1.0 / np.arange(1, x + 1)

    def exact_pm1(self, neg: int) -> int:
        """Numerator over D of S(x) for the F1 assignment whose -1 primes form the bitmask neg."""
        total = 0
        for n in range(1, self.x + 1):
            if bin(neg & int(self.odd[n])).count("1") & 1:
                total -= self.num[n]
            else:
                total += self.num[n]
        return total

    def exact_f0(self, neg: int, zero: int) -> int:
        total = 0
        for n in range(1, self.x + 1):
            if zero & int(self.support[n]):
                continue
            if bin(neg & int(self.odd[n])).count("1") & 1:
                total -= self.num[n]
            else:
                total += self.num[n]
        return total


def _popcount_parity(a: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(a) & 1).astype(np.int64) if hasattr(np, "bitwise_count") else np.vectorize(lambda v: bin(v).count("1") & 1)(a)


def delta1_brute(x: int, max_primes: int = BRUTE_MAX_PRIMES) -> MinResult:
    """Exact delta_1(x) by enumerating all of {-1, +1}^pi(x)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    if x == 1:
        return _trivial(x, "F1", "brute")
    k = len(primes_list(x))
    if k > max_primes:
        raise BudgetExceeded(f"pi({x}) = {k} exceeds the brute-force bound of {max_primes} primes")
    st = _Structure(x)
    # group n by odd-exponent mask: S = sum_mask C_mask * (-1)^{|mask & neg|}
    masks, inv = np.unique(st.odd[1:], return_inverse=True)
    weights = np.bincount(inv, weights=st.recip[1:])
    best = math.inf
    cands: list[int] = []
    for lo in range(0, 1 << k, _CHUNK):
        neg = np.arange(lo, min(lo + _CHUNK, 1 << k), dtype=np.int64)
        signs = 1 - 2 * _popcount_parity(neg[:, None] & masks[None, :])
        vals = signs @ weights
        m = vals.min()
        if m < best - _MARGIN:
            cands = []
        best = min(best, m)
        cands.extend(int(v) for v in neg[vals <= best + _MARGIN])
    return _pick_exact_pm1(st, cands, "brute", "global")


def _neg_to_key(st: _Structure, neg: int) -> tuple:
    return tuple(-1 if neg >> i & 1 else 1 for i in range(len(st.primes)))


def _pick_exact_pm1(st: _Structure, cands, method: str, cert: str, nodes: int = 0) -> MinResult:
    best_num, best_key, best_neg = None, None, None
    for neg in cands:
        num = st.exact_pm1(neg)
        key = _neg_to_key(st, neg)
        if best_num is None or num < best_num or (num == best_num and key < best_key):
            best_num, best_key, best_neg = num, key, neg
    signs = {p: (-1 if best_neg >> i & 1 else 1) for i, p in enumerate(st.primes)}
    return MinResult(st.x, "F1", ExactSum("exact", Fraction(best_num, st.D)),
                     _x_assignment(st.x, signs), method, cert, nodes)


def delta0_brute(x: int, max_assignments: int = BRUTE0_MAX_ASSIGNMENTS) -> MinResult:
    """Exact delta_0(x) by enumerating all of {-1, 0, +1}^pi(x)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    if x == 1:
        return _trivial(x, "F0", "brute")
    k = len(primes_list(x))
    total = 3**k
    if total > max_assignments:
        raise BudgetExceeded(f"3^pi({x}) = {total} assignments exceed the budget of {max_assignments}")
    st = _Structure(x)
    odd, sup, rec = st.odd[1:], st.support[1:], st.recip[1:]
    pow3 = 3 ** np.arange(k, dtype=np.int64)
    best = math.inf
    cands: list[tuple[int, int]] = []
    for lo in range(0, total, _CHUNK):
        idx = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // pow3[None, :]) % 3  # 0 -> -1, 1 -> 0, 2 -> +1
        bits = 1 << np.arange(k, dtype=np.int64)
        neg = (digits == 0).astype(np.int64) @ bits
        zero = (digits == 1).astype(np.int64) @ bits
        alive = (zero[:, None] & sup[None, :]) == 0
        signs = 1 - 2 * _popcount_parity(neg[:, None] & odd[None, :])
        vals = (alive * signs) @ rec
        m = vals.min()
        if m < best - _MARGIN:
            cands = []
        best = min(best, m)
        sel = vals <= best + _MARGIN
        cands.extend(zip(neg[sel].tolist(), zero[sel].tolist()))
    best_num = best_key = best_nz = None
    for neg, zero in cands:
        num = st.exact_f0(neg, zero)
        key = tuple(0 if zero >> i & 1 else (-1 if neg >> i & 1 else 1) for i in range(k))
        if best_num is None or num < best_num or (num == best_num and key < best_key):
            best_num, best_key, best_nz = num, key, (neg, zero)
    vals = dict(zip(st.primes, best_key))
    return MinResult(x, "F0", ExactSum("exact", Fraction(best_num, st.D)),
                     _x_assignment(x, vals, "F0"), "brute", "global")


# ---------------------------------------------------------------- large primes

def large_prime_reduction(partial: PrimeAssignment, x: int) -> dict[int, Fraction]:
    """Optimal values at the primes in (sqrt(x), x] given f on the primes <= sqrt(x).

    Each such p only meets n = p*m with m <= x/p < sqrt(x), so its contribution
    is (f(p)/p) * S(x/p) with S the partial's truncated sum; f(p) = -sign(S),
    and -1 on a tie.
    """
    r = math.isqrt(x)
    if partial.x_max < r and primes_list(partial.x_max) != primes_list(r):
        raise ValueError("partial must assign every prime <= sqrt(x)")
    large = [p for p in primes_list(x) if p > r]
    if not large:
        return {}
    top = x // large[0]
    sums = _prefix_exact(partial, top)
    return {p: Fraction(1) if sums[x // p] < 0 else Fraction(-1) for p in large}


def _prefix_exact(f: PrimeAssignment, top: int) -> list[Fraction]:
    """sums[y] = S_f(y) for 0 <= y <= top (f needs primes <= top)."""
    out = [Fraction(0)] * (top + 1)
    if top < 1:
        return out
    vals = cm_array(f.restrict(max(top, 1)) if f.x_max > top else f, top, exact=True).tolist()
    acc = Fraction(0)
    for n in range(1, top + 1):
        acc += Fraction(vals[n]) / n
        out[n] = acc
    return out


def complete_assignment(partial: PrimeAssignment, x: int) -> PrimeAssignment:
    r = math.isqrt(x)
    small = {p: partial[p] for p in primes_list(r)}
    small.update(large_prime_reduction(partial, x))
    cls = partial.cls if partial.cls != "F1" else "F1"
    if any(v not in (1, -1) for v in small.values()):
        cls = "F" if any(v not in (1, 0, -1) for v in small.values()) else "F0"
    return PrimeAssignment(x, cls, small)


# ---------------------------------------------------------------- branch and bound

class _BnB:
    def __init__(self, x: int):
        self.x = x
        self.st = _Structure(x)
        self.r = math.isqrt(x)
        primes = self.st.primes
        self.small = [p for p in primes if p <= self.r]
        self.large = [p for p in primes if p > self.r]
        ks = len(self.small)
        small_bits = (1 << ks) - 1
        sup = self.st.support
        self.smooth = np.flatnonzero((sup & ~small_bits) == 0)
        self.smooth = self.smooth[self.smooth >= 1]
        self.large_y = np.array([x // p for p in self.large], dtype=np.int64)
        self.large_w = np.array([1.0 / p for p in self.large])
        self.smooth_rec = self.st.recip[self.smooth]

    def node_bound(self, neg: int, depth: int) -> float:
        """Lower bound on S over all completions of the first `depth` small primes."""
        assigned = (1 << depth) - 1
        sup = self.st.support[self.smooth]
        odd = self.st.odd[self.smooth]
        known = (sup & ~assigned) == 0
        signs = 1 - 2 * _popcount_parity(neg & odd)
        terms = np.where(known, signs, -1) * self.smooth_rec
        full = terms.sum()
        if not len(self.large):
            return float(full)
        # for each y = x // p: S(y) lies within A(y) +- U(y)
        a = np.where(known, signs, 0) * self.smooth_rec
        u = np.where(known, 0, 1) * self.smooth_rec
        ca, cu = np.cumsum(a), np.cumsum(u)
        pos = np.searchsorted(self.smooth, self.large_y, side="right") - 1
        A = np.where(pos >= 0, ca[pos], 0.0)
        U = np.where(pos >= 0, cu[pos], 0.0)
        return float(full - (self.large_w * (np.abs(A) + U)).sum())

    def leaf(self, neg: int) -> tuple[int, int]:
        """(numerator over D, full -1 mask) of the best completion of a small assignment."""
        st = self.st
        sign = {}
        total = 0
        for n in self.smooth.tolist():
            s = -1 if bin(neg & int(st.odd[n])).count("1") & 1 else 1
            sign[n] = s
            total += s * st.num[n]
        full_neg = neg
        ks = len(self.small)
        for i, p in enumerate(self.large):
            # numerator of S(x/p)/p; every m <= x/p < sqrt(x) is smooth
            sy = sum(sign[m] * st.num[p * m] for m in range(1, self.x // p + 1))
            if sy >= 0:
                full_neg |= 1 << (ks + i)
                total -= sy
            else:
                total += sy
        return total, full_neg

    def search(self, prefix: int, depth0: int, inc_num: int, budget: int):
        """DFS below a fixed prefix, -1 branches first.

        Returns (best numerator or None, its -1 mask, nodes, budget_exhausted);
        only leaves strictly better than inc_num are reported.
        """
        ks = len(self.small)
        D = self.st.D
        best_num, best_neg = inc_num, None
        nodes = 0
        stack = [(prefix, depth0)]
        while stack:
            neg, depth = stack.pop()
            if nodes >= budget:
                return (None if best_neg is None else best_num), best_neg, nodes, True
            nodes += 1
            if self.node_bound(neg, depth) > best_num / D + _MARGIN:
                continue
            if depth == ks:
                num, full = self.leaf(neg)
                if num < best_num:
                    best_num, best_neg = num, full
                continue
            stack.append((neg, depth + 1))
            stack.append((neg | (1 << depth), depth + 1))
        return (None if best_neg is None else best_num), best_neg, nodes, False


def delta1_bnb(x: int, cfg: Optional[BnBConfig] = None) -> MinResult:
    """Exact delta_1(x): branch on primes <= sqrt(x), complete by large_prime_reduction."""
    cfg = cfg or BnBConfig()
    if x < 1:
        raise ValueError("x must be >= 1")
    if x == 1:
        return _trivial(x, "F1", "bnb")
    bb = _BnB(x)
    ks = len(bb.small)
    # incumbent: the lexicographically least leaf (all small primes -1)
    all_neg = (1 << ks) - 1
    inc_num, inc_neg = bb.leaf(all_neg)
    depth = min(cfg.split_depth, ks)
    prefixes = []
    for code in range(1 << depth):
        # code bit i = 0 means prime i is -1, so code order is lexicographic order
        neg = 0
        for i in range(depth):
            if not code >> (depth - 1 - i) & 1:
                neg |= 1 << i
        prefixes.append(neg)
    per_budget = max(1, cfg.node_budget // len(prefixes))

    def run(prefix):
        return bb.search(prefix, depth, inc_num, per_budget)

    if cfg.parallel_width > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallel_width) as pool:
            results = list(pool.map(run, prefixes))
    else:
        results = [run(p) for p in prefixes]
    best_num, best_neg = inc_num, inc_neg
    nodes = 1
    exhausted = False
    for num, neg, n_nodes, ex in results:
        nodes += n_nodes
        exhausted |= ex
        if num is not None and num < best_num:
            best_num, best_neg = num, neg
    signs = {p: (-1 if best_neg >> i & 1 else 1) for i, p in enumerate(bb.small + bb.large)}
    return MinResult(x, "F1", ExactSum("exact", Fraction(best_num, bb.st.D)),
                     _x_assignment(x, signs), "bnb", "local" if exhausted else "global", nodes)


# ---------------------------------------------------------------- coordinate descent

DESCENT_TOL = 1e-12
_MAX_SWEEPS = 10_000


class _Descent:
    """Float coordinate descent for S_f(x) over f(p) in [-1, 1]."""

    def __init__(self, x: int):
        self.x = x
        self.primes = primes_list(x)
        n = np.arange(x + 1, dtype=np.int64)
        self.recip = np.zeros(x + 1)
        self.recip[1:] = 1.0 / n[1:]
        # per prime: exponent of p in n and the p-free part of n
        self.vp, self.rest = {}, {}
        for p in self.primes:
            v = np.zeros(x + 1, dtype=np.int64)
            r = n.copy()
            r[0] = 1
            while True:
                hit = (r % p == 0) & (n > 0)
                if not hit.any():
                    break
                v[hit] += 1
                r[hit] //= p
            self.vp[p], self.rest[p] = v, r

    def values(self, a: dict[int, float]) -> np.ndarray:
        f = np.ones(self.x + 1)
        f[0] = 0.0
        for p in self.primes:
            v = self.vp[p]
            if a[p] == 1.0:
                continue
            f *= np.where(v > 0, float(a[p]) ** v, 1.0)
        return f

    def coefficients(self, f: np.ndarray, p: int) -> np.ndarray:
        """c_k with S = sum_k c_k a^k, c_k = S'_p(x/p^k)/p^k over p-free m."""
        v, rest = self.vp[p], self.rest[p]
        coeffs = []
        pk = 1
        while pk <= self.x:
            # the p-free parts of n with v_p(n) = k carry f(m)/m; sum over m <= x/p^k
            sel = v == len(coeffs)
            sel[0] = False
            coeffs.append(float(np.sum(f[rest[sel]] * self.recip[rest[sel]])) / pk
                          if len(coeffs) else float(np.sum(f[sel] * self.recip[sel])))
            pk *= p
        return np.array(coeffs)

    @staticmethod
    def minimize_poly(c: np.ndarray) -> float:
        """argmin of sum c_k a^k on [-1, 1]; endpoints win exact ties, then -1."""
        poly = np.polynomial.Polynomial(c)
        cands = [-1.0, 1.0]
        if len(c) > 2:
            for r in poly.deriv().roots():
                if abs(r.imag) < 1e-12 and -1.0 < r.real < 1.0:
                    cands.append(float(r.real))
        elif len(c) == 2 and c[1] == 0:
            return -1.0
        vals = [poly(t) for t in cands]
        best = min(vals)
        for t, v in zip(cands, vals):
            if v <= best + 1e-15:
                return t
        return cands[0]


def _descent_run(dz: _Descent, start: dict[int, float]) -> tuple[dict[int, float], float, int, list[float]]:
    a = dict(start)
    f = dz.values(a)
    cur = float(np.sum(f * dz.recip))
    history = [cur]
    order = sorted(dz.primes, reverse=True)
    for sweep in range(_MAX_SWEEPS):
        gain = 0.0
        for p in order:
            # rebuild f from the p-free parts so a zero coordinate can move again
            base = f.copy()
            v, rest = dz.vp[p], dz.rest[p]
            base[1:] = f[rest[1:]]
            c = dz.coefficients(base, p)
            t = dz.minimize_poly(c)
            new = float(np.polynomial.Polynomial(c)(t))
            old = float(np.polynomial.Polynomial(c)(a[p]))
            if new < old - DESCENT_TOL:
                a[p] = t
                f = base * np.where(v > 0, t ** v, 1.0)
                gain = max(gain, old - new)
                cur = float(np.sum(f * dz.recip))
                history.append(cur)
        if gain <= DESCENT_TOL:
            return a, cur, sweep + 1, history
    return a, cur, _MAX_SWEEPS, history


def delta_descent(x: int, starts: int = 8, seed: int = 0) -> MinResult:
    """Local minimum of S_f(x) over F by multistart coordinate descent.

    Coordinates are visited with primes descending. The all-(-1) start comes
    first; among equally good local minima the earliest start is kept.
    """
    if x < 1:
        raise ValueError("x must be >= 1")
    if starts < 0:
        raise ValueError("starts must be >= 0")
    if x == 1:
        return MinResult(1, "F", ExactSum("exact", Fraction(1)), PrimeAssignment(1, "F", {}),
                         "descent", "local")
    dz = _Descent(x)
    rng = np.random.default_rng(seed)
    inits = [{p: -1.0 for p in dz.primes}]
    for _ in range(starts):
        inits.append(dict(zip(dz.primes, rng.uniform(-1.0, 1.0, len(dz.primes)).tolist())))
    best = None
    sweeps = 0
    for init in inits:
        a, val, n_sweeps, _ = _descent_run(dz, init)
        sweeps += n_sweeps
        if best is None or val < best[1] - DESCENT_TOL:
            best = (a, val)
    a = best[0]
    if all(v in (-1.0, 0.0, 1.0) for v in a.values()):
        mini = PrimeAssignment(x, "F", {p: Fraction(int(v)) for p, v in a.items()})
        value = truncated_sum(mini, x, "exact")
    else:
        mini = PrimeAssignment(x, "F", {p: float(v) for p, v in a.items()})
        value = truncated_sum(mini, x, "float")
    return MinResult(x, "F", value, mini, "descent", "local", 0,
                     {"starts": starts, "seed": seed, "sweeps": sweeps})


def vertex_report(x: int, starts: int = 8, seed: int = 0, cfg: Optional[BnBConfig] = None) -> dict:
    """Compare the best descent minimum with delta_1(x); empirical only."""
    d = delta_descent(x, starts, seed)
    b = delta1_bnb(x, cfg)
    at_vertex = all(v in (-1, 1) for v in d.minimizer.values.values())
    equal = d.value.is_exact and d.value.value == b.value.value
    return {
        "x": x,
        "descent_value": d.value.to_str(),
        "descent_float": float(d.value),
        "delta1": b.value.to_str(),
        "delta1_float": float(b.value),
        "vertex": at_vertex,
        "values_equal": equal,
        "difference": float(d.value) - float(b.value),
        "delta1_certificate": b.certificate,
    }
