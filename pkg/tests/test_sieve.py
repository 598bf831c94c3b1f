from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trunclab._nt import BudgetExceeded
from trunclab.sieve import (CSV_HEADER, CheckpointError, ScanCheckpoint, liouville_range,
                            load_checkpoint, polya_scan, primes_up_to, save_checkpoint,
                            truncate_report_csv, turan_error_bound, turan_scan, write_report_csv)
from oracles import is_prime_naive, liouville


class Interrupt(Exception):
    pass


def test_primes_up_to_examples():
    assert primes_up_to(1) == []
    assert primes_up_to(0) == []
    assert primes_up_to(10) == [2, 3, 5, 7]
    p100 = primes_up_to(100)
    assert len(p100) == 25 and list(p100) == [n for n in range(101) if is_prime_naive(n)]
    assert p100.bound == 100


def test_liouville_examples():
    blk = liouville_range(1, 400)
    assert blk[1] == 1 and blk[12] == -1 and blk[360] == 1
    assert [blk[n] for n in range(1, 401)] == [liouville(n) for n in range(1, 401)]


@given(st.integers(1, 10**9), st.integers(1, 3000), st.integers(1, 700), st.integers(1, 4))
@settings(max_examples=40)
def test_liouville_segment_independence(start, length, segment, threads):
    a = liouville_range(start, length).values
    b = liouville_range(start, length, segment=segment, threads=threads).values
    assert np.array_equal(a, b)
    for i in (0, length // 2, length - 1):
        assert a[i] == liouville(start + i)


def test_liouville_multiplicativity_spot_check():
    rng = np.random.default_rng(5)
    bound = 10**6
    lam = liouville_range(1, bound).values
    for _ in range(10**4):
        m = int(rng.integers(1, 1000))
        n = int(rng.integers(1, bound // m + 1))
        assert lam[m * n - 1] == lam[m - 1] * lam[n - 1]


def test_liouville_budget():
    with pytest.raises(BudgetExceeded):
        liouville_range(1, 10**6, mem_budget=10**5)
    with pytest.raises(ValueError):
        liouville_range(0, 5)


def test_polya_small_values():
    _, rep = polya_scan(10**6, sample_every=10)
    sample = {x: L for x, L, _, _ in rep.rows}
    assert sample[10] == 0 and sample[100] == -2 and sample[1000] == -14
    assert sample[10**4] == -94 and sample[10**5] == -288 and sample[10**6] == -530
    assert rep.certified and rep.first_positive_L is None
    cp, _ = polya_scan(9)
    assert cp.L == -1
    cp, _ = polya_scan(2)
    assert cp.L == 0


def test_turan_against_exact_oracle():
    bound = 10**5
    _, rep = turan_scan(bound, sample_every=1)
    lam = liouville_range(1, bound).values
    by_x = {x: T for x, _, T, _ in rep.rows}
    # fixed-point oracle: acc = sum floor-ish(lambda(n) * 10^40 / n), off by < n units of 10^-40
    scale = 10**40
    acc = 0
    for n in range(1, bound + 1):
        acc += scale // n if lam[n - 1] > 0 else -(scale // n)
        if n >= 2:
            num, den = by_x[n].as_integer_ratio()
            gap = abs(Fraction(num * scale - acc * den, den * scale))
            assert gap <= Fraction(turan_error_bound(n)) + Fraction(n, scale)
    assert by_x[3] == pytest.approx(1 / 6)
    assert abs(Fraction(by_x[10]) - Fraction(823, 2520)) < Fraction(turan_error_bound(10))
    assert rep.certified


def test_turan_certification_to_1e6():
    _, rep = turan_scan(10**6)
    assert rep.certified and rep.T_min.value > turan_error_bound(10**6)


def _run_interrupted(kind, bound, cut_every, segment, stops):
    scan = polya_scan if kind == "polya" else turan_scan
    rows, cp = [], None
    saved = {}
    for stop in stops:
        def on_flush(c, pending, stop=stop):
            rows.extend(pending)
            saved["cp"] = c.dumps()
            if c.next_n > stop:
                raise Interrupt
        try:
            scan(bound, cp, sample_every=97, segment=segment, flush_every=cut_every, on_flush=on_flush)
        except Interrupt:
            pass
        cp = ScanCheckpoint.from_json(json.loads(saved["cp"]))
        rows = [r for r in rows if r[0] < cp.next_n]
        if cp.next_n > bound:
            break
    if cp.next_n <= bound:
        final, _ = scan(bound, cp, sample_every=97, segment=segment, flush_every=cut_every,
                        on_flush=lambda c, p: rows.extend(p))
    else:
        final = cp
    return final, rows


@given(st.sampled_from(["polya", "turan"]), st.integers(1000, 200_000), st.integers(997, 50_000),
       st.integers(64, 70_000), st.lists(st.integers(2, 200_000), min_size=1, max_size=3))
@settings(max_examples=30)
def test_resume_is_bit_identical(kind, bound, cut_every, segment, stops):
    scan = polya_scan if kind == "polya" else turan_scan
    ref_rows = []
    ref, _ = scan(bound, sample_every=97, segment=segment, flush_every=cut_every,
                  on_flush=lambda c, p: ref_rows.extend(p))
    got, rows = _run_interrupted(kind, bound, cut_every, max(64, segment // 3), sorted(stops))
    assert got.dumps() == ref.dumps()
    assert rows == ref_rows


def test_checkpoint_roundtrip_and_corruption(tmp_path):
    cp, _ = polya_scan(5000)
    path = tmp_path / "c.json"
    save_checkpoint(cp, path)
    assert load_checkpoint(path).dumps() == cp.dumps()
    obj = json.loads(path.read_text())
    obj["L"] += 2
    path.write_text(json.dumps(obj))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    obj = cp.to_json()
    obj["version"] = 99
    with pytest.raises(CheckpointError):
        ScanCheckpoint.from_json(obj)
    bad = ScanCheckpoint("polya", 10, 2)  # nine terms of +-1 cannot sum to 2
    with pytest.raises(CheckpointError):
        bad.validate()
    with pytest.raises(CheckpointError):
        turan_scan(6000, cp)
    with pytest.raises(CheckpointError):
        polya_scan(4000, cp)


def test_csv_truncation_drops_partial_line(tmp_path):
    path = tmp_path / "r.csv"
    write_report_csv([(2, 0, 0.5, 1e-16), (3, -1, 0.25, 1e-16), (8, -2, 0.1, 1e-16)], path)
    with open(path, "a") as fh:
        fh.write("1")  # a row cut short
    truncate_report_csv(path, 8)
    assert path.read_text().splitlines() == [CSV_HEADER, "2,0,0.5,9.9999999999999998e-17",
                                             "3,-1,0.25,9.9999999999999998e-17"]


def test_error_bound_monotone():
    xs = [1, 2, 10, 10**3, 10**6, 10**9, 10**12]
    vals = [turan_error_bound(x) for x in xs]
    assert vals == sorted(vals) and vals[-1] < 1e-12
