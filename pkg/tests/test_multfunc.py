from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trunclab.multfunc import (ExactSum, MultSpec, PrimeAssignment, cm_array, convolution_check,
                               divisor_transform, eval_cm, h_prime_power, h_transform, load_function,
                               mean_value, mult_array, summatory, truncated_sum)
from trunclab._nt import primes_list
from oracles import cm_value, harmonic_like

F = Fraction
LAM10 = PrimeAssignment.liouville(10)


def frac_values(x, den=6):
    return st.fixed_dictionaries({p: st.integers(-den, den).map(lambda k: F(k, den)) for p in primes_list(x)})


# ---------------------------------------------------------------- PrimeAssignment

def test_class_invariants():
    with pytest.raises(ValueError):
        PrimeAssignment(3, "F1", {2: 0, 3: 1})
    with pytest.raises(ValueError):
        PrimeAssignment(3, "F0", {2: F(1, 2), 3: 1})
    with pytest.raises(ValueError):
        PrimeAssignment(3, "F", {2: F(3, 2), 3: 1})
    with pytest.raises(ValueError):
        PrimeAssignment(5, "F", {2: 1, 3: 1})  # missing 5
    with pytest.raises(ValueError):
        PrimeAssignment(3, "F1", {2: 1.0, 3: 1})  # floats only in F
    assert not PrimeAssignment(3, "F", {2: 0.5, 3: 1}).exact


def test_assignment_json_roundtrip():
    f = PrimeAssignment(7, "F", {2: F(1, 2), 3: F(-1), 5: F(0), 7: F(2, 3)})
    obj = f.to_json()
    assert obj["primes"]["2"] == "1/2"
    assert load_function(json.loads(json.dumps(obj))) == f
    with pytest.raises(ValueError):
        PrimeAssignment.from_json({"x_max": 3, "primes": {}})


def test_eval_cm_examples():
    assert eval_cm(PrimeAssignment.liouville(8), 8) == -1
    assert eval_cm(PrimeAssignment.ones(5), 1) == 1
    f = PrimeAssignment(12, "F", {2: F(1, 2), 3: F(-1), 5: F(1), 7: F(1), 11: F(1)})
    assert eval_cm(f, 12) == F(-1, 4)
    with pytest.raises(ValueError):
        eval_cm(f, 13)


# ---------------------------------------------------------------- sums

def test_truncated_sum_examples():
    assert truncated_sum(PrimeAssignment.ones(4), 4).value == F(25, 12)
    assert truncated_sum(LAM10, 10).value == F(823, 2520)
    assert truncated_sum(PrimeAssignment.liouville(4), 4).value == F(5, 12)


def test_mean_value_examples():
    assert mean_value(PrimeAssignment.ones(7), 7).value == 1
    assert mean_value(PrimeAssignment.liouville(8), 8).value == F(-1, 4)
    assert mean_value(PrimeAssignment(2, "F0", {2: 0}), 2).value == F(1, 2)
    assert mean_value(PrimeAssignment.ones(10), F(7, 2)).value == F(3) / F(7, 2)


@given(frac_values(60), st.integers(1, 60))
def test_truncated_sum_matches_oracle(vals, x):
    f = PrimeAssignment(60, "F", vals)
    assert truncated_sum(f, x).value == harmonic_like(vals, x)
    assert summatory(f, x) == sum(cm_value(vals, n) for n in range(1, x + 1))


@given(frac_values(200, den=7), st.integers(1, 200))
def test_float_mode_encloses_exact(vals, x):
    f = PrimeAssignment(200, "F", vals)
    e = truncated_sum(f, x, "exact")
    fl = truncated_sum(f, x, "float")
    assert fl.encloses(e.value)
    # float prime values: compare with the exact sum over their binary values
    fvals = {p: float(v) for p, v in vals.items()}
    g = PrimeAssignment(200, "F", fvals)
    exact_of_floats = harmonic_like({p: F(v) for p, v in fvals.items()}, x)
    assert truncated_sum(g, x, "float").encloses(exact_of_floats)


def test_exact_rejected_for_floats():
    f = PrimeAssignment(5, "F", {2: 0.3, 3: 1.0, 5: -1.0})
    with pytest.raises(ValueError):
        truncated_sum(f, 5, "exact")
    assert truncated_sum(f, 5, "float").error_bound > 0


def test_cm_array_dtypes():
    assert cm_array(LAM10, 10).dtype == np.int8
    half = PrimeAssignment.constant(10, F(1, 2))
    assert cm_array(half, 10, exact=True)[8] == F(1, 8)
    assert cm_array(half, 10, exact=False)[8] == 0.125


# ---------------------------------------------------------------- divisor transform

def test_divisor_transform_examples():
    g = divisor_transform(LAM10, 10)
    assert g[4] == 1 and g[6] == 0 and g[1] == 1
    f = PrimeAssignment(10, "F", {2: F(1, 3), 3: F(-1, 2), 5: 0, 7: 1})
    g = divisor_transform(f, 10)
    for p in (2, 3, 5, 7):
        assert g[p] == 1 + f[p]


@given(frac_values(300, den=5))
@settings(max_examples=30)
def test_g_nonnegative_and_divisor_sums(vals):
    f = PrimeAssignment(300, "F", vals)
    g = divisor_transform(f, 300)
    assert all(v >= 0 for v in g[1:])
    for n in (1, 12, 60, 210, 256, 300):
        assert g[n] == sum(cm_value(vals, d) for d in range(1, n + 1) if n % d == 0)
    gf = divisor_transform(f, 300, "float")
    assert (gf[1:] >= 0).all()


# ---------------------------------------------------------------- MultSpec and h

def spec_from(x, fn):
    return MultSpec.from_rule(x, fn)


def test_multspec_validation():
    with pytest.raises(ValueError):
        MultSpec(4, {2: (F(1),), 3: (F(1),)})  # 2 needs two values
    with pytest.raises(ValueError):
        MultSpec(3, {2: (F(2),), 3: (F(1),)})
    s = spec_from(16, lambda p, k: -1 if p == 2 else 1)
    assert MultSpec.from_json(json.loads(json.dumps(s.to_json()))).values == s.values
    assert len(s.values[2]) == 4


def test_h_completely_multiplicative():
    f = PrimeAssignment(50, "F", {p: F(k % 5 - 2, 2) for k, p in enumerate(primes_list(50))})
    hs = h_transform(MultSpec.from_cm(f), 10**4)
    assert all(v == 0 for v in hs.h_values.values())
    assert hs.H0 == 1 and hs.H1 == 0


def test_h_example_minus_one_at_powers_of_two():
    s = spec_from(64, lambda p, k: -1 if p == 2 else 1)
    assert h_prime_power(s, 2, 1) == 0
    assert all(h_prime_power(s, 2, k) == -2 for k in range(2, 7))
    hs = h_transform(s, 10**6)
    # local factor at 2 is 1 + sum_{k>=2} -2/2^k = 0, up to the truncated tail
    assert hs.local[2] == F(1, 2**18)  # = 2 * sum_{k>=20} 2^-k, the truncated tail
    assert abs(float(hs.local_weighted[2]) - (-3)) < 1e-4
    assert hs.H0 >= 0
    assert convolution_check(s, 64) == (True, 0)


def test_h_example_plus_one_from_fourth():
    s = spec_from(64, lambda p, k: (-1 if k == 1 else 1) if p == 2 else 1)
    assert h_prime_power(s, 2, 2) == 0
    assert all(h_prime_power(s, 2, k) == 2 for k in range(3, 7))
    hs = h_transform(s, 10**6)
    assert abs(float(hs.H0) - 1.5) <= hs.H0_tail_bound + 1e-15
    assert hs.H0_tail_bound < 1e-2


def test_convolution_examples():
    f = PrimeAssignment.constant(100, F(1, 3))
    assert convolution_check(MultSpec.from_cm(f), 100)[0]
    s = spec_from(27, lambda p, k: 0 if (p, k) == (3, 2) else 1)
    assert s.value(3, 2) == 0 and s.value(3, 1) == 1
    assert convolution_check(s, 27) == (True, 0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25)
def test_h_structure_random(seed):
    from trunclab.verify import random_multspec
    rng = np.random.default_rng(seed)
    s = random_multspec(rng, 500)
    hs = h_transform(s, 5000)
    for pk, v in hs.h_values.items():
        assert abs(v) <= 2
    for p in primes_list(70):
        assert hs.h_values[p] == 0
    assert float(hs.H0) + hs.H0_tail_bound >= 0
    assert convolution_check(s, 500)[0]


def test_h_transform_enclosure_against_direct_sum():
    s = spec_from(10**4, lambda p, k: F((p + 3 * k) % 5 - 2, 2))
    hs = h_transform(s, 10**4)
    # direct sum of h(d)/d over d <= 10^4 (h supported on powerful d)
    direct = F(0)
    direct_h1 = 0.0
    for d in range(1, 10**4 + 1):
        try:
            v = hs.h(d)
        except KeyError:
            continue
        if v:
            direct += v / d
            direct_h1 -= float(v) * math.log(d) / d
    assert abs(float(direct) - float(hs.H0)) <= hs.H0_tail_bound + 1e-3
    assert abs(direct_h1 - hs.H1) <= hs.H1_tail_bound + 0.05


def test_mult_array_values():
    s = spec_from(32, lambda p, k: -1 if p == 2 else F(1, k + 1))
    arr = mult_array(s, 32)
    assert arr[12] == -1 * F(1, 2) and arr[9] == F(1, 3) and arr[30] == -1 * F(1, 2) * F(1, 2)
