"""Departure-time sampling through the tandem-queue reading of the gap chain.

Queue m holds the gap ahead of particle m and serves at that particle's
rate; a served customer joins queue m-1, and departures from queue m are the
jumps of particle m. Departure epochs satisfy

    T_m(j) = max(T_m(j-1), T_{m+1}(j - gap_m(0))) + Exp(rate_m),

which is solved row by row with a running-maximum scan (see `_kernels`).
Sampling is exact in law for fixed-time functionals, and the finite grid is
exact for the infinite chain: a row only ever reads the row above at columns
inside its own budget, so rows whose budget hits zero cannot influence the
reported ones. Pathwise couplings and ring-level dynamics stay in `engine`.

All draws are counter-based: rates and gaps use the same per-label streams
as `disorder.sample_rates` and the `measures` samplers under the replica
key, and service draws use one stream per row.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from . import rng, _kernels
from .disorder import DisorderField, RateLaw, rate_stream_key
from .errors import WindowAuditError
from .measures import IIDGapSpec, geometric_gaps_from_uniforms

_MAX_RETRIES = 60


def replica_key(seed: int, index: int) -> int:
    """Key of replica `index` under a master seed."""
    return rng.derive(seed, rng.STREAM_REPLICA, index)


def service_row_keys(rkey: int, labels: np.ndarray) -> np.ndarray:
    """Per-row service-stream keys for particle labels (vectorized)."""
    return rng.derive_array(rng.derive(rkey, rng.STREAM_SERVICE), labels)


def lindley_row_reference(rowkey: int, rate: float, prev, shift: int,
                          budget: int) -> list[float]:
    """Pure-Python row update, bit-identical to the compiled kernel."""
    inv = 1.0 / rate
    w = [-math.log(rng.uniform(rowkey, j + 1)) * inv for j in range(budget)]
    out = []
    s = 0.0
    m = 0.0
    for j in range(budget):
        a_idx = j - shift
        if 0 <= a_idx:
            e = prev[a_idx] - s
            if e > m:
                m = e
        s += w[j]
        out.append(s + m)
    return out


def tagged_departures(rates: np.ndarray, gaps: np.ndarray, horizon: float,
                      base_budget: int, rkey: int, report_rows: int = 0,
                      free_top: bool = False) -> Optional[np.ndarray]:
    """Departure counts by `horizon` for rows 0..report_rows of a gap chain.

    rates[m] and gaps[m] describe particle m and the gap ahead of it. With
    free_top the last supplied row jumps unhindered (a finite window); the
    arrays are then used in full. Otherwise the chain is treated as
    infinite: rows are cut off where the column budget chain reaches zero,
    which loses nothing. Returns None when a reported row's count could not
    be certified within base_budget (caller escalates).
    """
    gaps = np.asarray(gaps, dtype=np.int64)
    rates = np.asarray(rates, dtype=float)
    R = report_rows
    if free_top:
        m_rows = len(rates)
        budgets = np.full(m_rows, base_budget, dtype=np.int64)
        shifts = np.empty(m_rows, dtype=np.int64)
        shifts[:m_rows - 1] = gaps[:m_rows - 1]
        shifts[m_rows - 1] = base_budget  # top row reads no arrivals
    else:
        cum = np.concatenate(([0], np.cumsum(gaps)))  # cum[m] = gaps below row m
        if R + 1 >= len(cum):
            raise ValueError("gap array too short for the reported rows")
        tail = base_budget - (cum[R + 1:] - cum[R])
        cut = np.nonzero(tail <= 0)[0]
        if cut.size == 0:
            raise ValueError("gap array exhausted before the budget chain closed")
        m_rows = R + 1 + int(cut[0])
        if len(rates) < m_rows:
            raise ValueError("rate array shorter than the rows in play")
        budgets = np.concatenate((np.full(R + 1, base_budget, dtype=np.int64),
                                  tail[:m_rows - R - 1]))
        shifts = gaps[:m_rows].copy()
    rowkeys = service_row_keys(rkey, np.arange(m_rows, dtype=np.int64))
    counts = np.zeros(R + 1, dtype=np.int64)
    exhausted = np.zeros(R + 1, dtype=np.int64)
    buf_a = np.empty(base_budget, dtype=np.float64)
    buf_b = np.empty(base_budget, dtype=np.float64)
    wbuf = np.empty(base_budget, dtype=np.float64)
    _kernels.tandem_passage(rowkeys, rates[:m_rows], shifts, budgets,
                            float(horizon), R, buf_a, buf_b, wbuf, counts, exhausted)
    if exhausted.any():
        return None
    return counts


def _tagged_budget(law_c: float, one_minus_alpha: float, horizon: float,
                   zmax: float) -> int:
    return int(math.ceil(law_c * horizon + zmax * horizon**one_minus_alpha)) + 32


def sample_tagged_counts_iid(law: RateLaw, spec: IIDGapSpec, horizon: float,
                             rkey: int, report_rows: int = 0,
                             zmax: float = 3.5) -> np.ndarray:
    """Jump counts of the tagged particle (and the rows above it) by `horizon`.

    Fresh disorder and fresh i.i.d. gaps per replica key; exact for the
    infinite chain, with automatic budget escalation on the rare replica
    whose tagged particle outruns the allowance.
    """
    d = law.derived()
    base = _tagged_budget(law.c, d.one_minus_alpha, horizon, zmax)
    gap_key = rng.derive(rkey, rng.STREAM_GAPS)
    rate_key = rate_stream_key(rkey)
    gaps = np.zeros(0, dtype=np.int64)
    rates = np.zeros(0, dtype=float)
    need_rows = report_rows + 2 + int(base / max(spec.u, 0.125)) + 64
    for _ in range(_MAX_RETRIES):
        if len(gaps) < need_rows:
            labels = np.arange(len(gaps), need_rows, dtype=np.int64)
            gaps = np.concatenate((gaps, spec.draw(rng.uniform_array(gap_key, labels))))
            rates = np.concatenate((rates, law.quantile(rng.uniform_array(rate_key, labels))))
        try:
            counts = tagged_departures(rates, gaps, horizon, base, rkey,
                                       report_rows=report_rows)
        except ValueError:
            need_rows = int(need_rows * 1.5) + 64  # gap chain closed too slowly
            continue
        if counts is not None:
            return counts
        base = int(base * 1.4) + 64
        need_rows = max(need_rows, report_rows + 2 + int(base / max(spec.u, 0.125)) + 64)
    raise RuntimeError("budget escalation failed to certify the tagged count")


def sample_tagged_counts_equilibrium(field: DisorderField, a: float,
                                     horizon: float, rkey: int,
                                     report_rows: int = 0,
                                     fastening: Optional[float] = None) -> np.ndarray:
    """Tagged jump counts under quenched rates with equilibrium gap starts.

    The disorder is the caller's fixed field (labels from 0 upward are
    used); gaps are geometric with ratio a/rate per label, drawn from the
    replica key. Raises WindowAuditError if the chain wants more labels
    than the field stores.
    """
    if a <= 0.0:
        raise ValueError("equilibrium sampling needs a > 0")
    rates_all = np.asarray(field.rate_window(0, field.last_label), dtype=float)
    if fastening is not None:
        rates_all = np.maximum(rates_all, fastening)
    if np.any(rates_all <= a):
        raise ValueError("velocity a must sit below every effective rate")
    mean = a * horizon
    base = int(math.ceil(mean + 10.0 * math.sqrt(mean + 1.0))) + 32
    gap_key = rng.derive(rkey, rng.STREAM_GAPS)
    for _ in range(_MAX_RETRIES):
        labels = np.arange(len(rates_all), dtype=np.int64)
        u = rng.uniform_array(gap_key, labels)
        gaps = geometric_gaps_from_uniforms(u, a / rates_all)
        try:
            counts = tagged_departures(rates_all, gaps, horizon, base, rkey,
                                       report_rows=report_rows)
        except ValueError as exc:
            raise WindowAuditError(
                f"disorder field with {len(rates_all)} labels is too small "
                f"for horizon {horizon}") from exc
        if counts is not None:
            return counts
        base = int(base * 1.4) + 64
    raise RuntimeError("budget escalation failed to certify the tagged count")


def jam_front_count(law: RateLaw, horizon: float, speed: float, rkey: int,
                    rows_allowance: Optional[int] = None) -> int:
    """Particles strictly beyond speed*horizon in a jam with fresh disorder.

    Rates for labels 0, -1, -2, ... come from the replica key's rate stream
    (identical to a DisorderField drawn under that key); the scan stops at
    the first particle not beyond, and the row allowance doubles in the
    rare case every allowed row was beyond.
    """
    d = law.derived()
    if rows_allowance is None:
        rows_allowance = int(math.ceil(4.0 * horizon**d.one_minus_alpha)) + 64
    ct_floor = int(math.floor(speed * horizon))
    rate_key = rate_stream_key(rkey)
    serv_key = rng.derive(rkey, rng.STREAM_SERVICE)
    inv_exp = 1.0 / (law.nu + 1.0)
    for _ in range(_MAX_RETRIES):
        n_cols = ct_floor + rows_allowance
        buf_a = np.empty(n_cols, dtype=np.float64)
        buf_b = np.empty(n_cols, dtype=np.float64)
        wbuf = np.empty(n_cols, dtype=np.float64)
        x = _kernels.jam_front_count(np.uint64(rate_key), np.uint64(serv_key),
                                     float(horizon), ct_floor, rows_allowance,
                                     law.c, law.eps, law.window_mass, inv_exp,
                                     buf_a, buf_b, wbuf)
        if x >= 0:
            return int(x)
        rows_allowance *= 2
    raise RuntimeError("row allowance escalation failed for the front count")


def jam_departure_counts(rates: np.ndarray, horizon: float, rkey: int,
                         lead_allowance: Optional[int] = None) -> np.ndarray:
    """Jump counts by `horizon` for the particles of a jam release.

    rates[k-1] belongs to the k-th particle from the lead (label 1-k).
    Returns counts up to and including the first unmoved particle; callers
    needing deeper rows must pass enough rates (an unmoved particle pins
    every particle behind it at zero jumps).
    """
    rates = np.asarray(rates, dtype=float)
    n = len(rates)
    labels = 1 - np.arange(1, n + 1, dtype=np.int64)
    rowkeys = service_row_keys(rkey, labels)
    if lead_allowance is None:
        lead_allowance = int(math.ceil(horizon * float(rates[0])
                                       + 10.0 * math.sqrt(horizon + 1.0))) + 32
    for _ in range(_MAX_RETRIES):
        counts = np.zeros(n, dtype=np.int64)
        buf_a = np.empty(lead_allowance, dtype=np.float64)
        buf_b = np.empty(lead_allowance, dtype=np.float64)
        wbuf = np.empty(lead_allowance, dtype=np.float64)
        used = _kernels.jam_departure_counts(rowkeys, rates, float(horizon),
                                             lead_allowance, counts, buf_a, buf_b, wbuf)
        if used >= 0:
            return counts
        lead_allowance = int(lead_allowance * 1.5) + 32
    raise RuntimeError("lead allowance escalation failed for the jam counts")
