"""Small number-theory helpers shared by the exact modules."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


class TrunclabError(Exception):
    """Base class for errors raised by trunclab."""


class BudgetExceeded(TrunclabError):
    """A configured resource budget (memory, nodes, candidates) was exceeded."""


def prime_sieve(n: int) -> np.ndarray:
    """Ascending int64 array of the primes <= n."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    mark = np.ones(n + 1, dtype=bool)
    mark[:2] = False
    mark[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if mark[p]:
            mark[p * p :: 2 * p] = False
    return np.flatnonzero(mark).astype(np.int64)


@lru_cache(maxsize=32)
def _primes_tuple(n: int) -> tuple[int, ...]:
    return tuple(int(p) for p in prime_sieve(n))


def primes_list(n: int) -> tuple[int, ...]:
    """Cached tuple of Python ints, the primes <= n."""
    return _primes_tuple(int(n))


@lru_cache(maxsize=8)
def spf_array(n: int) -> np.ndarray:
    """Smallest-prime-factor table for 0..n (spf[0] = spf[1] = 0)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    if n < 2:
        return spf
    for p in prime_sieve(math.isqrt(n))[::-1]:
        spf[p * p :: p] = p
    idx = np.arange(n + 1, dtype=np.int64)
    prime_mask = spf == 0
    prime_mask[:2] = False
    spf[prime_mask] = idx[prime_mask]
    spf.setflags(write=False)
    return spf


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization of n by trial division, as (p, e) pairs."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def big_omega(n: int) -> int:
    return sum(e for _, e in factorize(n))


@lru_cache(maxsize=16)
def lcm_upto(n: int) -> int:
    """lcm(1, 2, ..., n)."""
    out = 1
    for p in primes_list(n):
        pk = p
        while pk * p <= n:
            pk *= p
        out *= pk
    return out


@lru_cache(maxsize=4)
def _reciprocal_numerators(n: int) -> tuple[int, ...]:
    d = lcm_upto(n)
    return (0,) + tuple(d // k for k in range(1, n + 1))


def signed_reciprocal_sum(values, x: int) -> Fraction:
    """Exact sum of values[k]/k for 1 <= k <= x, for integer values.

    values is indexed from 1 (values[0] is ignored). Uses the common
    denominator lcm(1..x), so only integer additions are performed.
    """
    if x < 1:
        return Fraction(0)
    nums = _reciprocal_numerators(x)
    vals = np.asarray(values[: x + 1], dtype=np.int64)
    total = 0
    for k in np.flatnonzero(vals[1:]) + 1:
        v = int(vals[k])
        total += nums[k] if v == 1 else (-nums[k] if v == -1 else v * nums[k])
    return Fraction(total, lcm_upto(x))


def harmonic_upper(x: float) -> float:
    """Upper bound for H(x) = sum_{n<=x} 1/n, valid for x >= 1."""
    return math.log(x) + 1.0 if x >= 1 else 0.0


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
# Miller-Rabin with the bases above is deterministic below this bound.
MR_DETERMINISTIC_LIMIT = 3317044064679887385961981


def _mr_round(n: int, d: int, s: int, a: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_probable_prime(n: int, rounds: int = 8) -> bool:
    """Strong probable-prime test with the first `rounds` prime bases."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    return all(_mr_round(n, d, s, a) for a in _MR_BASES[:rounds])


def is_prime(n: int) -> bool:
    """Deterministic primality for n below MR_DETERMINISTIC_LIMIT."""
    if n >= MR_DETERMINISTIC_LIMIT:
        raise ValueError(f"deterministic primality is only available below {MR_DETERMINISTIC_LIMIT}")
    return is_probable_prime(n, rounds=len(_MR_BASES))


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v.strip())
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    raise TypeError(f"not an exact rational: {v!r}")


def fraction_str(v: Fraction) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
