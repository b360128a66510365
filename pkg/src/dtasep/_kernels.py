"""Compiled inner loops for the departure-time recursion and disorder scans.

Every kernel reproduces the package's counter-based draws bit for bit: the
inline splitmix64 here must stay in lockstep with `rng.uniform` and
`rng.derive`. Floating point is strict IEEE (no fastmath), so kernel output
is deterministic and matches the pure-Python reference implementations
exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64, float64, int64

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _u01(key, counter):
    # rng.uniform(key, counter)
    x = key + counter * _GOLDEN
    x = x + _GOLDEN
    x = (x ^ (x >> uint64(30))) * _MIX1
    x = (x ^ (x >> uint64(27))) * _MIX2
    x = x ^ (x >> uint64(31))
    return (float64(x >> uint64(11)) + 1.0) * (2.0**-53)


@njit(cache=True, inline="always")
def _derive1(key, token):
    # rng.derive(key, token) for a single token
    h = (key ^ token) + _GOLDEN
    h = (h ^ (h >> uint64(30))) * _MIX1
    h = (h ^ (h >> uint64(27))) * _MIX2
    return h ^ (h >> uint64(31))


@njit(cache=True)
def lindley_row(rowkey, rate, prev, prev_len, shift, budget, out, wbuf):
    """One row of the departure-time recursion.

    T(j) = max(T(j-1), A(j)) + w_j for j = 1..budget, with w_j ~ Exp(rate)
    drawn from stream `rowkey` at counter j, and A(j) = prev[j - shift - 1]
    (0.0 when j <= shift). Writes T(j) into out[j-1], using wbuf as spacing
    scratch (two passes pipeline better than one serial chain). Caller
    guarantees budget - shift <= prev_len so reads never pass the valid part
    of prev; a row with shift >= budget is free (pure partial sums).
    """
    inv = 1.0 / rate
    for j in range(budget):
        wbuf[j] = -np.log(_u01(rowkey, uint64(j + 1))) * inv
    s = 0.0
    m = 0.0  # running max of A(j) - S(j-1); nonnegative since A >= 0, S(0) = 0
    for j in range(budget):
        a_idx = j - shift
        if a_idx >= 0:
            e = prev[a_idx] - s
            if e > m:
                m = e
        s += wbuf[j]
        out[j] = s + m
    return 0


@njit(cache=True)
def count_at_or_below(arr, n, horizon):
    """Entries among arr[0..n-1] (sorted ascending) that are <= horizon."""
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] <= horizon:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def tandem_passage(rowkeys, rates, shifts, budgets, horizon, n_report,
                   buf_a, buf_b, wbuf, counts, exhausted):
    """Departure counts by `horizon` for the reported rows of a gap chain.

    Rows are indexed 0..M-1 from the tagged particle upward; row m has
    service rate rates[m], shifts[m] initial customers (the initial gap),
    and column budget budgets[m]. Budgets must satisfy the chain condition
    budgets[m] - shifts[m] <= budgets[m+1] (with budgets[M] treated as 0),
    which makes the finite grid exact for the infinite chain. The recursion
    runs from row M-1 down to row 0. counts[m], for m <= n_report, receives
    the departures from row m by `horizon`; exhausted[m] is set when the
    budget could not certify the count (caller retries with a larger base
    budget).
    """
    m_rows = rates.shape[0]
    prev = buf_a
    cur = buf_b
    prev_len = 0
    for m in range(m_rows - 1, -1, -1):
        b = budgets[m]
        sh = shifts[m]
        if sh > b:
            sh = b  # fully free row; avoids pointless index arithmetic
        lindley_row(rowkeys[m], rates[m], prev, prev_len, sh, b, cur, wbuf)
        if m <= n_report:
            cnt = count_at_or_below(cur, b, horizon)
            counts[m] = cnt
            exhausted[m] = 1 if cnt >= b else 0
        tmp = prev
        prev = cur
        cur = tmp
        prev_len = b
    return 0


@njit(cache=True)
def jam_front_count(ratekey, servkey, horizon, ct_floor, max_rows,
                    c, eps, window_mass, inv_exp, buf_a, buf_b, wbuf):
    """Particles strictly beyond the reference point in a jam release.

    Row k = 1, 2, ... is the k-th particle from the lead, with label 1-k and
    rate drawn by inverse transform from stream `ratekey` at the label's
    two's-complement counter. Particle k is beyond iff it made at least
    ct_floor + k jumps by `horizon`; those events form a prefix in k, so the
    scan stops at the first particle not beyond. Returns the count, or -1
    when all max_rows rows were beyond (caller retries with more rows).
    Buffers must have length >= ct_floor + max_rows.
    """
    prev = buf_a
    cur = buf_b
    prev_len = 0
    budget = ct_floor + max_rows
    for k in range(1, max_rows + 1):
        label = uint64(int64(1 - k))
        u = _u01(ratekey, label)
        if u <= window_mass:
            rate = c + eps * (u / window_mass) ** inv_exp
        else:
            rate = 1.0
        rowkey = _derive1(servkey, label)
        sh = budget if k == 1 else 0  # lead particle is free
        lindley_row(rowkey, rate, prev, prev_len, sh, budget, cur, wbuf)
        need = ct_floor + k
        if cur[need - 1] > horizon:
            return k - 1
        tmp = prev
        prev = cur
        cur = tmp
        prev_len = budget
    return -1


@njit(cache=True)
def jam_departure_counts(rowkeys, rates, horizon, max_cols, counts, buf_a, buf_b, wbuf):
    """Jump counts by `horizon` for successive particles of a jam release.

    Row k (array index k-1) is budgeted one column past the count of the row
    ahead of it, which bounds its own count; the scan stops at the first
    particle that has not jumped at all. Returns the number of rows evolved,
    or -1 when the lead-row allowance max_cols was exhausted (caller
    retries). counts[i] is left 0 beyond the evolved rows.
    """
    n_rows = rates.shape[0]
    prev = buf_a
    cur = buf_b
    prev_len = 0
    budget = max_cols
    for i in range(n_rows):
        sh = budget if i == 0 else 0  # lead particle is free
        lindley_row(rowkeys[i], rates[i], prev, prev_len, sh, budget, cur, wbuf)
        cnt = count_at_or_below(cur, budget, horizon)
        if cnt >= budget:
            return -1
        counts[i] = cnt
        if cnt == 0:
            return i + 1
        tmp = prev
        prev = cur
        cur = tmp
        prev_len = budget
        budget = cnt + 1
    return n_rows


@njit(cache=True)
def scan_first_hit(key, threshold_u, max_index):
    """First counter i in [0, max_index) whose uniform draw is <= threshold_u.

    Matches scanning inverse-transform rates for the first one at or below
    the rate threshold whose cdf value is threshold_u. Returns max_index
    when there is no hit in range.
    """
    for i in range(max_index):
        if _u01(key, uint64(i)) <= threshold_u:
            return i
    return max_index
