"""Cross-module verification suites: identities, oracle agreement and bounds.

Every check returns a dict with its name, pass flag, the number of cases and
a (short) list of counterexamples. Failures are data, not exceptions.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Callable

import numpy as np

from ._nt import primes_list
from .constructions import prop31_decomposition, realize_as_character, verify_window_identity
from .minimize import delta1_bnb, delta1_brute, large_prime_reduction
from .multfunc import (MultSpec, PrimeAssignment, convolution_check, divisor_transform,
                       h_transform, truncated_sum)
from .rounding import round_to_pm1

SUITES = ("identities", "oracles", "bounds", "all")
MAX_COUNTEREXAMPLES = 10


# ---------------------------------------------------------------- random inputs

def random_value(rng: np.random.Generator, cls: str = "F", den: int = 12) -> Fraction:
    if cls == "F1":
        return Fraction(int(rng.choice((-1, 1))))
    if cls == "F0":
        return Fraction(int(rng.integers(-1, 2)))
    return Fraction(int(rng.integers(-den, den + 1)), den)


def random_assignment(rng: np.random.Generator, x: int, cls: str = "F", den: int = 12) -> PrimeAssignment:
    return PrimeAssignment(max(x, 1), cls, {p: random_value(rng, cls, den) for p in primes_list(x)})


def random_multspec(rng: np.random.Generator, x: int, den: int = 12) -> MultSpec:
    """Random f*(p^k) in [-1, 1]; prime powers above x follow a fixed seeded rule."""
    salt = int(rng.integers(1 << 30))

    def rule(p: int, k: int) -> Fraction:
        h = (p * 1_000_003 + k * 97 + salt) * 2654435761 % (2 * den + 1)
        return Fraction(h - den, den)

    vals = {p: tuple(random_value(rng, "F", den) for _ in range(_exps(p, x))) for p in primes_list(x)}
    return MultSpec(x, vals, rule)


def _exps(p: int, x: int) -> int:
    k, pk = 0, p
    while pk <= x:
        k, pk = k + 1, pk * p
    return k


def _result(name: str, cases: int, bad: list) -> dict:
    return {"name": name, "passed": not bad, "checked": cases,
            "failures": len(bad), "counterexamples": bad[:MAX_COUNTEREXAMPLES]}


# ---------------------------------------------------------------- identities

def check_window_identity(x_max: int = 2000, N_max: int = 5) -> dict:
    """Window identity; pairs whose window holds a prime p with p^2 <= x are reported apart."""
    rep = verify_window_identity(x_max, N_max)
    real = [f for f in rep["failures"] if not f["repeated_primes"]]
    out = _result("window_identity", rep["checked"], real)
    out["outside_hypothesis"] = [(f["x"], f["N"]) for f in rep["failures"] if f["repeated_primes"]]
    return out


def check_divisor_sum_identity(rng, count: int = 10, x_max: int = 300) -> dict:
    bad = []
    for _ in range(count):
        x = int(rng.integers(1, x_max + 1))
        f = random_assignment(rng, x)
        if not prop31_decomposition(f, x).identity_holds:
            bad.append({"x": x, "f": f.to_json()})
    return _result("divisor_sum_identity", count, bad)


def check_convolution(rng, count: int = 10, x_max: int = 2000) -> dict:
    bad = []
    for _ in range(count):
        fs = random_multspec(rng, x_max)
        ok, dev = convolution_check(fs, x_max)
        if not ok:
            bad.append({"x": x_max, "max_deviation": str(dev), "fstar": fs.to_json()})
    return _result("h_convolution", count, bad)


# ---------------------------------------------------------------- oracles

def check_bnb_vs_brute(x_max: int = 60, parallel_width: int = 1) -> dict:
    from .minimize import BnBConfig

    cfg = BnBConfig(parallel_width=parallel_width)
    bad = []
    for x in range(1, x_max + 1):
        a, b = delta1_brute(x), delta1_bnb(x, cfg)
        if a.value.value != b.value.value or a.minimizer.sign_key() != b.minimizer.sign_key():
            bad.append({"x": x, "brute": a.value.to_str(), "bnb": b.value.to_str()})
    return _result("bnb_equals_brute", x_max, bad)


def check_large_prime_reduction(x_max: int = 30) -> dict:
    """For every +-1 partial on primes <= sqrt(x), compare with all completions."""
    bad = []
    cases = 0
    for x in range(1, x_max + 1):
        r = math.isqrt(x)
        small = primes_list(r)
        large = [p for p in primes_list(x) if p > r]
        for signs in itertools.product((-1, 1), repeat=len(small)):
            partial = PrimeAssignment(max(r, 1), "F1", dict(zip(small, signs)))
            got = large_prime_reduction(partial, x)
            cases += 1
            best = None
            for comp in itertools.product((-1, 1), repeat=len(large)):
                vals = dict(zip(small, signs)) | dict(zip(large, comp))
                v = truncated_sum(PrimeAssignment(x, "F1", vals), x).value
                if best is None or v < best[0]:  # first hit is lexicographically least
                    best = (v, comp)
            if best is not None and tuple(got[p] for p in large) != best[1]:
                bad.append({"x": x, "partial": list(signs), "reduction": [int(got[p]) for p in large],
                            "brute": list(best[1])})
    return _result("large_prime_reduction", cases, bad)


def check_rounding(rng, count: int = 20, x_max: int = 200) -> dict:
    bad = []
    for _ in range(count):
        x = int(rng.integers(1, x_max + 1))
        f = random_assignment(rng, x)
        g, trace = round_to_pm1(f, x)
        ok = (trace.sign_property() and g.cls == "F1"
              and all(v in (-1, 1) for v in g.values.values())
              and truncated_sum(g, x).value == trace.final_sum)
        if not ok:
            bad.append({"x": x, "f": f.to_json()})
    return _result("rounding_sign_property", count, bad)


def check_characters(rng, count: int = 5, x_max: int = 20) -> dict:
    bad = []
    for _ in range(count):
        x = int(rng.integers(1, x_max + 1))
        pat = random_assignment(rng, x, "F1")
        w = realize_as_character(pat, x)
        if not w.verified():
            bad.append({"x": x, "q": w.q, "pattern": pat.to_json()})
    return _result("character_witness", count, bad)


# ---------------------------------------------------------------- bounds

def check_g_nonnegative(rng, count: int = 20, x: int = 5000) -> dict:
    bad = []
    for _ in range(count):
        f = random_assignment(rng, x)
        g = divisor_transform(f, x, "float")
        if (g[1:] < 0).any():
            n = int(np.flatnonzero(g[1:] < 0)[0]) + 1
            bad.append({"x": x, "n": n, "g": repr(float(g[n])), "f": f.to_json()})
    return _result("g_nonnegative", count, bad)


def check_sum_lower_bound(rng, count: int = 50, x_max: int = 500) -> dict:
    bad = []
    for _ in range(count):
        x = int(rng.integers(1, x_max + 1))
        f = random_assignment(rng, x, str(rng.choice(("F", "F0", "F1"))))
        v = truncated_sum(f, x).value
        if v < -1:
            bad.append({"x": x, "value": str(v), "f": f.to_json()})
    return _result("sum_at_least_minus_one", count, bad)


def check_h0_nonnegative(rng, count: int = 10, x: int = 200, bound: int = 10**4) -> dict:
    bad = []
    for _ in range(count):
        fs = random_multspec(rng, x)
        hs = h_transform(fs, bound)
        if float(hs.H0) + hs.H0_tail_bound < 0:
            bad.append({"H0": str(hs.H0), "tail": hs.H0_tail_bound, "fstar": fs.to_json()})
    return _result("H0_nonnegative", count, bad)


# ---------------------------------------------------------------- driver

def _suite_checks(name: str, rng) -> list[Callable[[], dict]]:
    table = {
        "identities": [check_window_identity,
                       lambda: check_divisor_sum_identity(rng),
                       lambda: check_convolution(rng)],
        "oracles": [check_bnb_vs_brute, check_large_prime_reduction,
                    lambda: check_rounding(rng), lambda: check_characters(rng)],
        "bounds": [lambda: check_g_nonnegative(rng), lambda: check_sum_lower_bound(rng),
                   lambda: check_h0_nonnegative(rng)],
    }
    if name == "all":
        return table["identities"] + table["oracles"] + table["bounds"]
    if name not in table:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return table[name]


def verify_suite(name: str = "all", seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    results = [check() for check in _suite_checks(name, rng)]
    return {"suite": name, "seed": seed, "passed": all(r["passed"] for r in results),
            "failures": sum(r["failures"] for r in results), "checks": results}
