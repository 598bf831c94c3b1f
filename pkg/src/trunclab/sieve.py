"""Segmented sieving of primes and of the Liouville function, and the long
Polya / Turan partial-sum scans built on it.

lambda(n) is obtained from the parity of Omega(n). For a segment [a, b) every
prime p <= sqrt(b - 1) flips the parity of its multiples once per power p^k,
and a float32 log accumulator detects the (at most one) remaining prime
factor above sqrt(b - 1).
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import _kernels
from ._nt import BudgetExceeded, TrunclabError, harmonic_upper, prime_sieve

FORMAT_VERSION = 1
DEFAULT_SEGMENT = 1 << 20
DEFAULT_MEM_BUDGET = 1 << 30
DEFAULT_SAMPLE_EVERY = 10**6
DEFAULT_FLUSH_EVERY = 10**8
# bytes of scratch per integer while sieving one segment
_SEGMENT_BYTES_PER_INT = 14

_U = 2.0**-53


class CheckpointError(TrunclabError):
    """A checkpoint is malformed, of the wrong kind, or fails its integrity checks."""


@dataclass(frozen=True)
class PrimeList(Sequence):
    bound: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def __getitem__(self, i):
        out = self.primes[i]
        return int(out) if np.ndim(out) == 0 else [int(p) for p in out]

    def __iter__(self) -> Iterator[int]:
        return (int(p) for p in self.primes)

    def __eq__(self, other) -> bool:
        if isinstance(other, PrimeList):
            return self.bound == other.bound and np.array_equal(self.primes, other.primes)
        return list(self) == list(other)


@dataclass(frozen=True)
class LiouvilleBlock:
    start: int
    values: np.ndarray  # int8, values[i] = lambda(start + i)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int) -> int:
        """lambda(n) for start <= n < start + len."""
        if not self.start <= n < self.start + len(self.values):
            raise IndexError(n)
        return int(self.values[n - self.start])


def primes_up_to(bound: int) -> PrimeList:
    if bound < 0:
        raise ValueError("bound must be >= 0")
    return PrimeList(bound, prime_sieve(bound))


def _sieve_segment(start: int, stop: int, primes: np.ndarray) -> np.ndarray:
    """lambda(n) for start <= n < stop, given all primes <= sqrt(stop - 1)."""
    size = stop - start
    parity = np.zeros(size, dtype=np.uint8)
    logs = np.zeros(size, dtype=np.float32)
    for p in primes:
        p = int(p)
        if p * p >= stop:
            break
        lp = np.float32(math.log(p))
        pk = p
        while pk < stop:
            first = (-start) % pk
            parity[first::pk] ^= 1
            logs[first::pk] += lp
            pk *= p
    # leftover cofactor is 1 or a single prime > sqrt(stop - 1); log gap >= log 2
    rest = np.log(np.arange(start, stop, dtype=np.float64)) - logs
    parity ^= (rest > 0.5).astype(np.uint8)
    return (1 - 2 * parity.astype(np.int8)).astype(np.int8)


def _segment_bounds(start: int, stop: int, segment: int, cuts: int = 0) -> list[tuple[int, int]]:
    """Split [start, stop) into segments; if cuts > 0 also break after every multiple of cuts."""
    out = []
    a = start
    while a < stop:
        b = min(a + segment, stop)
        if cuts > 0:
            nxt = ((a - 1) // cuts + 1) * cuts + 1  # right after the next multiple of cuts
            b = min(b, nxt)
        out.append((a, b))
        a = b
    return out


def _iter_segments(bounds: list[tuple[int, int]], threads: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (start, lambda block) in order; blocks may be sieved concurrently."""
    if not bounds:
        return
    primes = prime_sieve(math.isqrt(bounds[-1][1] - 1) + 1)
    if threads <= 1:
        for a, b in bounds:
            yield a, _sieve_segment(a, b, primes)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending: deque = deque()
        it = iter(bounds)
        for a, b in it:
            pending.append((a, pool.submit(_sieve_segment, a, b, primes)))
            if len(pending) >= 2 * threads:
                break
        while pending:
            a, fut = pending.popleft()
            block = fut.result()
            nxt = next(it, None)
            if nxt is not None:
                pending.append((nxt[0], pool.submit(_sieve_segment, nxt[0], nxt[1], primes)))
            yield a, block


def _check_memory(segment: int, threads: int, mem_budget: int) -> None:
    need = _SEGMENT_BYTES_PER_INT * segment * (2 * max(threads, 1) + 1)
    if need > mem_budget:
        raise BudgetExceeded(
            f"segment working set {need} bytes exceeds memory budget {mem_budget} bytes; "
            "lower the segment size or thread count"
        )


def liouville_range(start: int, length: int, *, segment: int = DEFAULT_SEGMENT,
                    mem_budget: int = DEFAULT_MEM_BUDGET, threads: int = 1) -> LiouvilleBlock:
    """lambda(start), ..., lambda(start + length - 1) by segmented sieving."""
    if start < 1 or length < 1:
        raise ValueError("need start >= 1 and length >= 1")
    if segment < 1:
        raise ValueError("segment must be positive")
    if length > mem_budget:
        raise BudgetExceeded(f"output of {length} bytes exceeds memory budget {mem_budget} bytes")
    segment = min(segment, length)
    _check_memory(segment, threads, mem_budget - length)
    out = np.empty(length, dtype=np.int8)
    for a, block in _iter_segments(_segment_bounds(start, start + length, segment), threads):
        out[a - start : a - start + len(block)] = block
    return LiouvilleBlock(start, out)


def turan_error_bound(x: int) -> float:
    """A priori bound on |T_computed(x) - T(x)| for the compensated scan.

    Covers rounding of each term lambda(n)/n, the Kahan-Babuska summation
    error 2u|T| + O(n u^2) sum|t|, and the final rounding of s + c, with
    |T| and sum|t| both bounded by H(x) <= log x + 1.
    """
    if x < 1:
        return 0.0
    return (5 * _U + 4 * x * _U * _U) * harmonic_upper(x)


@dataclass(frozen=True)
class Record:
    x: int
    value: float | int
    type: str  # "lmax", "lmin" or "tmin"


@dataclass
class ScanCheckpoint:
    kind: str
    next_n: int = 2
    L: int = 1
    T_value: float = 1.0
    T_comp: float = 0.0
    records: list[Record] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    @classmethod
    def initial(cls, kind: str) -> "ScanCheckpoint":
        if kind not in ("polya", "turan"):
            raise ValueError(f"unknown scan kind {kind!r}")
        return cls(kind=kind)

    @property
    def T(self) -> float:
        return self.T_value + self.T_comp

    @property
    def T_err(self) -> float:
        return turan_error_bound(self.next_n - 1)

    def _payload(self) -> dict:
        recs = []
        for r in self.records:
            val = int(r.value) if r.type != "tmin" else repr(float(r.value))
            recs.append({"x": int(r.x), "value": val, "type": r.type})
        return {
            "version": self.format_version,
            "kind": self.kind,
            "next_n": int(self.next_n),
            "L": int(self.L),
            "T_value": repr(float(self.T_value)),
            "T_comp": repr(float(self.T_comp)),
            "records": recs,
        }

    def to_json(self) -> dict:
        payload = self._payload()
        payload["checksum"] = _checksum(payload)
        return payload

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "ScanCheckpoint":
        try:
            version = int(obj["version"])
            if version != FORMAT_VERSION:
                raise CheckpointError(f"checkpoint version {version} is not supported (expected {FORMAT_VERSION})")
            cp = cls(
                kind=str(obj["kind"]),
                next_n=int(obj["next_n"]),
                L=int(obj["L"]),
                T_value=float(obj["T_value"]),
                T_comp=float(obj["T_comp"]),
                records=[
                    Record(int(r["x"]), float(r["value"]) if r["type"] == "tmin" else int(r["value"]), str(r["type"]))
                    for r in obj["records"]
                ],
                format_version=version,
            )
            stored = obj["checksum"]
        except CheckpointError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"malformed checkpoint: {exc}") from exc
        if stored != _checksum(cp._payload()):
            raise CheckpointError("checkpoint checksum mismatch")
        cp.validate()
        return cp

    def validate(self) -> None:
        """Cheap structural invariants; raises CheckpointError."""
        if self.kind not in ("polya", "turan"):
            raise CheckpointError(f"unknown checkpoint kind {self.kind!r}")
        if self.next_n < 2:
            raise CheckpointError("next_n must be >= 2")
        count = self.next_n - 1
        if abs(self.L) > count or (self.L - count) % 2:
            raise CheckpointError(f"L={self.L} impossible after {count} terms of +-1")
        T = self.T
        if not math.isfinite(T) or abs(T) > harmonic_upper(count):
            raise CheckpointError("T out of range")
        allowed = {"polya": {"lmax", "lmin"}, "turan": {"tmin"}}[self.kind]
        last: dict[str, float] = {}
        prev_x = 1
        for r in self.records:
            if r.type not in allowed or not 2 <= r.x < self.next_n or r.x < prev_x:
                raise CheckpointError(f"bad record {r}")
            if r.type in last:
                better = r.value > last[r.type] if r.type == "lmax" else r.value < last[r.type]
                if not better:
                    raise CheckpointError(f"records of type {r.type} are not strictly monotone")
            last[r.type] = r.value
            prev_x = r.x


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(cp: ScanCheckpoint, path) -> None:
    import os
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(cp.dumps())
    os.replace(tmp, path)


def load_checkpoint(path) -> ScanCheckpoint:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    return ScanCheckpoint.from_json(obj)


@dataclass
class ScanReport:
    kind: str
    start_n: int
    bound: int
    rows: list[tuple[int, int, float, float]]  # (x, L, T, T_err)
    L_final: int
    T_final: float
    T_err_final: float
    L_min: Optional[Record]
    L_max: Optional[Record]
    first_positive_L: Optional[int]
    T_min: Optional[Record]
    certified: bool

    def summary(self) -> dict:
        def rec(r):
            return None if r is None else {"x": r.x, "value": r.value}

        return {
            "kind": self.kind,
            "start_n": self.start_n,
            "bound": self.bound,
            "L": self.L_final,
            "T": repr(self.T_final),
            "T_err": repr(self.T_err_final),
            "L_min": rec(self.L_min),
            "L_max": rec(self.L_max),
            "first_positive_L": self.first_positive_L,
            "T_min": rec(self.T_min),
            "certified": self.certified,
            "rows": len(self.rows),
        }


CSV_HEADER = "x,L,T,T_err"


def format_row(row: tuple[int, int, float, float]) -> str:
    x, L, T, err = row
    return f"{x},{L},{T:.17g},{err:.17g}"


def write_report_csv(rows, path, append: bool = False) -> None:
    with open(path, "a" if append else "w", encoding="utf-8", newline="\n") as fh:
        if not append:
            fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(format_row(row) + "\n")


def truncate_report_csv(path, next_n: int) -> None:
    """Drop rows with x >= next_n, so a resumed scan can append cleanly.

    A trailing line without its newline (a write cut short by a kill) is
    dropped as well.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    lines.pop()  # "" after a final newline, or the partial last line
    if not lines:
        lines = [CSV_HEADER]
    elif lines[0] != CSV_HEADER:
        raise CheckpointError(f"{path} is not a scan report (bad header)")
    keep = [lines[0]] + [ln for ln in lines[1:] if ln.count(",") == 3 and int(ln.split(",", 1)[0]) < next_n]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(keep) + "\n")


_KIND_FLAGS = {
    "polya": _kernels.ROW_SAMPLE | _kernels.ROW_LMAX | _kernels.ROW_LMIN,
    "turan": _kernels.ROW_SAMPLE | _kernels.ROW_TMIN,
}


def _scan(kind: str, bound: int, checkpoint: Optional[ScanCheckpoint], *, sample_every: int,
          segment: int, threads: int, mem_budget: int, flush_every: int,
          on_flush: Optional[Callable[[ScanCheckpoint, list], None]]) -> tuple[ScanCheckpoint, ScanReport]:
    if bound < 2:
        raise ValueError("bound must be >= 2")
    if segment < 1 or threads < 1:
        raise ValueError("segment and threads must be positive")
    if checkpoint is None:
        cp = ScanCheckpoint.initial(kind)
    else:
        if checkpoint.kind != kind:
            raise CheckpointError(f"checkpoint kind {checkpoint.kind!r} does not match scan kind {kind!r}")
        if checkpoint.format_version != FORMAT_VERSION:
            raise CheckpointError("checkpoint version mismatch")
        checkpoint.validate()
        if checkpoint.next_n > bound + 1:
            raise CheckpointError(f"checkpoint is already past the bound (next_n={checkpoint.next_n})")
        cp = ScanCheckpoint(kind, checkpoint.next_n, checkpoint.L, checkpoint.T_value,
                            checkpoint.T_comp, list(checkpoint.records))
    _check_memory(segment, threads, mem_budget)
    start_n = cp.next_n

    last = {}
    for r in cp.records:
        last[r.type] = r.value
    L, s, c = np.int64(cp.L), float(cp.T_value), float(cp.T_comp)
    lmin = np.int64(last.get("lmin", 1 << 62))
    lmax = np.int64(last.get("lmax", -(1 << 62)))
    tmin = float(last.get("tmin", math.inf))
    keep_flags = _KIND_FLAGS[kind]

    rows: list[tuple[int, int, float, float]] = []
    pending_rows: list = []
    bufs = _kernels.empty_row_buffers(min(segment, bound + 1 - start_n) if bound + 1 > start_n else 1)
    bounds = _segment_bounds(start_n, bound + 1, segment, flush_every)
    for a, lam in _iter_segments(bounds, threads):
        L, s, c, lmin, lmax, tmin, nrows = _kernels.scan_block(
            lam, np.int64(a), L, s, c, lmin, lmax, tmin, np.int64(sample_every), *bufs)
        xs, ls, ts, flags = (b[:nrows] for b in bufs)
        for i in np.flatnonzero(flags & keep_flags):
            x, f = int(xs[i]), int(flags[i])
            row = (x, int(ls[i]), float(ts[i]), turan_error_bound(x))
            rows.append(row)
            pending_rows.append(row)
            if kind == "polya":
                if f & _kernels.ROW_LMAX:
                    cp.records.append(Record(x, int(ls[i]), "lmax"))
                if f & _kernels.ROW_LMIN:
                    cp.records.append(Record(x, int(ls[i]), "lmin"))
            elif f & _kernels.ROW_TMIN:
                cp.records.append(Record(x, float(ts[i]), "tmin"))
        cp.next_n = a + len(lam)
        cp.L, cp.T_value, cp.T_comp = int(L), float(s), float(c)
        if on_flush is not None and flush_every > 0 and (cp.next_n - 1) % flush_every == 0:
            on_flush(cp, pending_rows)
            pending_rows = []
    if on_flush is not None and pending_rows:
        on_flush(cp, pending_rows)
    return cp, _make_report(kind, start_n, bound, cp, rows)


def _make_report(kind, start_n, bound, cp: ScanCheckpoint, rows) -> ScanReport:
    by_type: dict[str, list[Record]] = {}
    for r in cp.records:
        by_type.setdefault(r.type, []).append(r)
    lmax = by_type.get("lmax", [])
    first_pos = next((r.x for r in lmax if r.value > 0), None)
    t_min = by_type.get("tmin", [None])[-1]
    err = turan_error_bound(bound)
    if kind == "polya":
        certified = first_pos is None
    else:
        certified = t_min is not None and t_min.value - err > 0
    return ScanReport(
        kind=kind,
        start_n=start_n,
        bound=bound,
        rows=rows,
        L_final=cp.L,
        T_final=cp.T,
        T_err_final=cp.T_err,
        L_min=by_type.get("lmin", [None])[-1],
        L_max=lmax[-1] if lmax else None,
        first_positive_L=first_pos,
        T_min=t_min,
        certified=certified,
    )


def polya_scan(bound: int, checkpoint: Optional[ScanCheckpoint] = None, *,
               sample_every: int = DEFAULT_SAMPLE_EVERY, segment: int = DEFAULT_SEGMENT,
               threads: int = 1, mem_budget: int = DEFAULT_MEM_BUDGET,
               flush_every: int = DEFAULT_FLUSH_EVERY, on_flush=None) -> tuple[ScanCheckpoint, ScanReport]:
    """Scan L(x) = sum_{n<=x} lambda(n) up to bound.

    The report's `certified` flag is True when L(x) <= 0 for every
    2 <= x <= bound; otherwise first_positive_L holds the least such x.
    """
    return _scan("polya", bound, checkpoint, sample_every=sample_every, segment=segment,
                 threads=threads, mem_budget=mem_budget, flush_every=flush_every, on_flush=on_flush)


def turan_scan(bound: int, checkpoint: Optional[ScanCheckpoint] = None, *,
               sample_every: int = DEFAULT_SAMPLE_EVERY, segment: int = DEFAULT_SEGMENT,
               threads: int = 1, mem_budget: int = DEFAULT_MEM_BUDGET,
               flush_every: int = DEFAULT_FLUSH_EVERY, on_flush=None) -> tuple[ScanCheckpoint, ScanReport]:
    """Scan T(x) = sum_{n<=x} lambda(n)/n up to bound.

    `certified` is True only when the running minimum of T over
    2 <= x <= bound exceeds turan_error_bound(bound).
    """
    return _scan("turan", bound, checkpoint, sample_every=sample_every, segment=segment,
                 threads=threads, mem_budget=mem_budget, flush_every=flush_every, on_flush=on_flush)
