from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from trunclab._nt import BudgetExceeded, primes_list
from trunclab.minimize import (BnBConfig, _descent_run, _Descent, complete_assignment, delta0_brute,
                               delta1_bnb, delta1_brute, delta_descent, large_prime_reduction,
                               vertex_report)
from trunclab.multfunc import PrimeAssignment, truncated_sum
from oracles import harmonic_like

F = Fraction


def test_delta1_brute_examples():
    r = delta1_brute(1)
    assert r.value.value == 1 and r.minimizer.values == {}
    r = delta1_brute(4)
    assert r.value.value == F(5, 12) and r.minimizer.sign_key() == (-1, -1)
    r = delta1_brute(10)
    assert r.value.value == F(823, 2520) and set(r.minimizer.values.values()) == {-1}
    assert r.certificate == "global" and r.method == "brute"


def test_delta0_brute_examples():
    assert delta0_brute(1).value.value == 1
    r = delta0_brute(2)
    assert r.value.value == F(1, 2) and r.minimizer[2] == -1
    assert delta0_brute(4).value.value == F(5, 12)


def test_budget_refusals():
    with pytest.raises(BudgetExceeded, match="28"):
        delta1_brute(200)
    with pytest.raises(BudgetExceeded):
        delta0_brute(100)
    with pytest.raises(ValueError):
        BnBConfig(node_budget=0)


@pytest.mark.parametrize("x", range(1, 23))
def test_brute_matches_enumeration_oracle(x):
    primes = primes_list(x)
    best = None
    for signs in itertools.product((-1, 1), repeat=len(primes)):
        v = harmonic_like(dict(zip(primes, signs)), x)
        if best is None or v < best[0]:
            best = (v, signs)
    r = delta1_brute(x)
    assert r.value.value == best[0] and r.minimizer.sign_key() == best[1]


@pytest.mark.parametrize("x", range(1, 17))
def test_delta0_matches_enumeration_oracle(x):
    primes = primes_list(x)
    best = min((harmonic_like(dict(zip(primes, s)), x), s)
               for s in itertools.product((-1, 0, 1), repeat=len(primes)))
    r = delta0_brute(x)
    assert r.value.value == best[0] and r.minimizer.sign_key() == best[1]


def test_minimizer_reproduces_value():
    for x in (7, 19, 33, 48):
        for r in (delta1_brute(x), delta1_bnb(x), delta0_brute(min(x, 30))):
            assert truncated_sum(r.minimizer, r.x).value == r.value.value
            assert r.minimizer.cls == r.cls


def test_bnb_small_and_parallel_width():
    assert delta1_bnb(1).value.value == 1
    assert delta1_bnb(4).value.value == F(5, 12)
    base = [delta1_bnb(x).to_json() for x in range(1, 61)]
    for w in (2, 4, 16):
        assert [delta1_bnb(x, BnBConfig(parallel_width=w)).to_json() for x in range(1, 61)] == base


def test_bnb_beyond_brute_range():
    r = delta1_bnb(150)
    assert r.certificate == "global"
    assert truncated_sum(r.minimizer, 150).value == r.value.value
    assert -1 <= r.value.value <= truncated_sum(PrimeAssignment.liouville(150), 150).value


def test_bnb_budget_gives_local_certificate():
    r = delta1_bnb(150, BnBConfig(node_budget=8))
    assert r.certificate == "local"
    assert r.value.value >= delta1_bnb(150).value.value


def test_large_prime_reduction_examples():
    part = PrimeAssignment(5, "F1", {2: -1, 3: -1, 5: -1})
    comp = large_prime_reduction(part, 25)
    assert comp[11] == -1  # S(2) = 1/2 > 0
    assert all(comp[p] == -1 for p in primes_list(25) if p > 12)  # S(1) = 1
    ones = PrimeAssignment.ones(3)
    assert large_prime_reduction(ones, 9)[7] == -1
    full = complete_assignment(part, 25)
    assert full.cls == "F1" and full.x_max == 25


def test_descent_examples():
    r = delta_descent(1)
    assert r.value.value == 1
    for x, v in ((2, F(1, 2)), (4, F(5, 12))):
        r = delta_descent(x, 4, 1)
        assert r.value.is_exact and r.value.value == v and r.certificate == "local"
        assert r.cls == "F" and r.method == "descent"


def test_descent_interior_minimum_at_nine():
    r = delta_descent(9, 0, 0)
    # f(3) = -3/4 beats the vertex by 1/144: 571/2520 - 1/144 = 123/560
    assert not r.value.is_exact
    assert r.value.encloses(F(123, 560))
    assert abs(r.minimizer[3] + 0.75) < 1e-12


@given(st.integers(2, 80), st.integers(0, 2**16))
@settings(max_examples=25)
def test_descent_is_monotone_and_bounded(x, seed):
    import numpy as np
    dz = _Descent(x)
    rng = np.random.default_rng(seed)
    start = dict(zip(dz.primes, rng.uniform(-1, 1, len(dz.primes)).tolist()))
    a, val, sweeps, hist = _descent_run(dz, start)
    assert all(b <= a_ + 1e-12 for a_, b in zip(hist, hist[1:]))
    assert all(-1 <= v <= 1 for v in a.values())
    assert val >= -1


@pytest.mark.parametrize("x", [3, 8, 15, 24, 30])
def test_class_chain(x):
    d = float(delta_descent(x, 6, 0).value)
    z = delta0_brute(x).value.value
    o = delta1_brute(x).value.value
    assert d <= float(z) + 1e-12 and z <= o


def test_vertex_report():
    r = vertex_report(4)
    assert r["vertex"] and r["values_equal"] and r["delta1"] == "5/12"
    r = vertex_report(1)
    assert r["values_equal"]
    r = vertex_report(10)
    assert not r["vertex"] and r["difference"] < 0


def test_result_json():
    obj = delta1_brute(10).to_json()
    assert obj["value"] == "823/2520" and obj["minimizer"]["primes"]["7"] == "-1"
    obj = delta_descent(9, 0).to_json()
    assert obj["minimizer"]["class"] == "F"
