"""Prime-by-prime rounding of f in F to a +-1 function.

Primes are processed from the largest down to 2. At prime p the value f(p)
is replaced by -1 when S'_p(x/p) > 0 and by +1 otherwise, where S'_p sums
f(m)/m over m coprime to p. All sums are exact rationals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from ._nt import fraction_str, primes_list
from .multfunc import PrimeAssignment, cm_array


def s_prime(f: PrimeAssignment, p: int, y: int) -> Fraction:
    """sum_{m <= y, p does not divide m} f(m)/m, exactly."""
    if y > f.x_max:
        raise ValueError(f"y = {y} exceeds the assignment range {f.x_max}")
    if y < 1:
        return Fraction(0)
    vals = cm_array(f, y, exact=True).tolist()
    return sum((Fraction(vals[m]) / m for m in range(1, y + 1) if m % p), Fraction(0))


@dataclass(frozen=True)
class RoundingStep:
    j: int
    p: int
    S_x: Fraction  # S_j(x), before the value at p changes
    S_prime: Fraction  # S'_j(x/p)
    old_value: Fraction
    new_sign: int
    delta: Fraction  # S_{j-1}(x) - S_j(x)

    def sign_ok(self) -> bool:
        return (self.new_sign - self.old_value) * self.S_prime <= 0

    def to_json(self) -> dict:
        return {
            "j": self.j,
            "p": self.p,
            "S_j_x": fraction_str(self.S_x),
            "S_j_prime": fraction_str(self.S_prime),
            "old_value": fraction_str(self.old_value),
            "new_sign": self.new_sign,
            "delta": fraction_str(self.delta),
        }


@dataclass
class RoundingTrace:
    x: int
    steps: list[RoundingStep] = field(default_factory=list)
    initial_sum: Fraction = Fraction(0)
    final_sum: Fraction = Fraction(0)

    def sign_property(self) -> bool:
        return all(s.sign_ok() for s in self.steps)

    def to_json(self) -> dict:
        return {
            "x": self.x,
            "initial_sum": fraction_str(self.initial_sum),
            "final_sum": fraction_str(self.final_sum),
            "steps": [s.to_json() for s in self.steps],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def round_to_pm1(f: PrimeAssignment, x: int) -> tuple[PrimeAssignment, RoundingTrace]:
    if x < 1:
        raise ValueError("x must be >= 1")
    if x > f.x_max:
        raise ValueError(f"x = {x} exceeds the assignment range {f.x_max}")
    if not f.exact:
        raise ValueError("rounding needs exact rational prime values")
    primes = primes_list(x)
    vals = [Fraction(v) for v in cm_array(f.restrict(x), x, exact=True).tolist()]
    cur = {p: Fraction(f[p]) for p in primes}
    S = sum((vals[n] / n for n in range(1, x + 1)), Fraction(0))
    trace = RoundingTrace(x, initial_sum=S)
    for j in range(len(primes), 0, -1):
        p = primes[j - 1]
        y = x // p
        sp = sum((vals[m] / m for m in range(1, y + 1) if m % p), Fraction(0))
        new = -1 if sp > 0 else 1
        # only multiples of p change: f(p^k m) = new^k f(m) for p not dividing m
        delta = Fraction(0)
        if new != cur[p]:
            for n in range(p, x + 1, p):
                k, m = 0, n
                while m % p == 0:
                    m //= p
                    k += 1
                v = vals[m] * new**k
                delta += (v - vals[n]) / n
                vals[n] = v
        trace.steps.append(RoundingStep(j, p, S, sp, cur[p], new, delta))
        S += delta
        cur[p] = Fraction(new)
    trace.final_sum = S
    return PrimeAssignment(x, "F1", cur), trace
