"""Compiled inner loops for the long Liouville scans."""

from __future__ import annotations

import numpy as np
from numba import njit

# Row flags written by scan_block.
ROW_SAMPLE = 1
ROW_LMAX = 2
ROW_LMIN = 4
ROW_TMIN = 8


@njit(cache=True, nogil=True)
def scan_block(lam, n0, L, s, c, lmin, lmax, tmin, sample_every,
               out_x, out_l, out_t, out_flag):
    """Advance the running sums over lam = (lambda(n0), lambda(n0+1), ...).

    T is carried as a Neumaier pair (s, c), one term at a time, so the
    state after any n does not depend on how the range was blocked.
    Returns the new state and the number of rows written.
    """
    rows = 0
    for i in range(lam.shape[0]):
        n = n0 + i
        v = lam[i]
        L += v
        t = v / n
        y = s + t
        if abs(s) >= abs(t):
            c += (s - y) + t
        else:
            c += (t - y) + s
        s = y
        if n < 2:
            continue
        flag = 0
        if sample_every > 0 and n % sample_every == 0:
            flag |= 1
        if L > lmax:
            lmax = L
            flag |= 2
        if L < lmin:
            lmin = L
            flag |= 4
        T = s + c
        if T < tmin:
            tmin = T
            flag |= 8
        if flag != 0:
            out_x[rows] = n
            out_l[rows] = L
            out_t[rows] = T
            out_flag[rows] = flag
            rows += 1
    return L, s, c, lmin, lmax, tmin, rows


def empty_row_buffers(n: int):
    return (np.empty(n, dtype=np.int64), np.empty(n, dtype=np.int64),
            np.empty(n, dtype=np.float64), np.empty(n, dtype=np.int8))
