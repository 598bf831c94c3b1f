"""Independent reference implementations used only by the tests."""

from __future__ import annotations

from fractions import Fraction


def trial_factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime_naive(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))


def liouville(n: int) -> int:
    return (-1) ** sum(trial_factor(n).values())


def cm_value(values: dict, n: int) -> Fraction:
    out = Fraction(1)
    for p, e in trial_factor(n).items():
        out *= Fraction(values[p]) ** e
    return out


def harmonic_like(values: dict, x: int) -> Fraction:
    """sum_{n<=x} f(n)/n with f completely multiplicative from prime values."""
    return sum((cm_value(values, n) / n for n in range(1, x + 1)), Fraction(0))
