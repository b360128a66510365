"""Annealed Monte Carlo experiments at desk scale.

Each experiment draws fresh disorder per replica (the quenched-equilibrium
study pins one field on purpose), pushes replicas through the
departure-time recursion, and reports empirical statistics next to the
analytic reference curves. Replicas are independent tasks keyed by
(master seed, replica index); aggregation is a deterministic fold in
replica order, so results do not depend on the worker count.

Tail statistics are summarized by medians for scaling fits: the normalized
slowdown has a stretched-exponential upper tail, which makes the median a
steadier horizon-to-horizon summary than the mean.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from . import rng, stats
from .disorder import RateLaw, critical_gap, sample_rates, scan_event_probability
from .errors import HypothesisError
from .measures import IIDGapSpec, geometric_gaps_from_uniforms
from .tandem import (jam_departure_counts, jam_front_count, replica_key,
                     sample_tagged_counts_equilibrium, sample_tagged_counts_iid)

DEFAULT_SEED = 0xDA7A5EED  # documented fixed default: runs reproduce by default


# --------------------------------------------------------------------------
# replica queue

def _pmap(worker, payloads: list, jobs: int) -> list:
    """Map a worker over payloads, optionally across processes, in order."""
    if jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    import multiprocessing as mp
    chunk = max(1, len(payloads) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs,
                             mp_context=mp.get_context("fork")) as pool:
        return list(pool.map(worker, payloads, chunksize=chunk))


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)


# --------------------------------------------------------------------------
# result containers

@dataclass
class TailCurve:
    """Empirical tail probabilities on a parameter grid with analytic bounds."""

    grid: np.ndarray
    empirical: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    bound_lower: np.ndarray
    bound_upper: np.ndarray
    t: float
    replicas: int
    samples: np.ndarray = dc_field(default=None, repr=False)

    def rows(self):
        for i in range(len(self.grid)):
            yield (float(self.grid[i]), float(self.empirical[i]),
                   float(self.ci_lo[i]), float(self.ci_hi[i]),
                   float(self.bound_lower[i]), float(self.bound_upper[i]))

    HEADER = ["param", "empirical", "ci_lo", "ci_hi", "bound_lower", "bound_upper"]


@dataclass
class ScalingFit:
    """Log-log regression of a per-horizon summary statistic."""

    horizons: np.ndarray
    statistic: np.ndarray
    slope: float
    slope_se: float

    def rows(self):
        for t, s in zip(self.horizons, self.statistic):
            yield (float(t), float(s), self.slope, self.slope_se)

    HEADER = ["t", "statistic", "slope", "slope_se"]


def fit_medians(horizons: Sequence[float], ensembles: dict[float, np.ndarray],
                center=lambda t: 0.0) -> ScalingFit:
    """Scaling fit of median(sample - center(t)) across horizons."""
    hs = np.asarray(sorted(horizons), dtype=float)
    if len(hs) < 3:
        raise ValueError("scaling fits need at least three horizons")
    med = np.array([np.median(ensembles[t] - center(t)) for t in hs])
    if np.any(med <= 0):
        raise ValueError("median statistic must be positive for a log fit")
    slope, _, se = stats.loglog_fit(hs, med)
    return ScalingFit(horizons=hs, statistic=med, slope=slope, slope_se=se)


def _tail_curve(samples: np.ndarray, grid: np.ndarray, scale: float, t: float,
                bounds) -> TailCurve:
    grid = np.asarray(grid, dtype=float)
    n = len(samples)
    emp, lo, hi = [], [], []
    for z in grid:
        k = int(np.count_nonzero(samples > z * scale))
        w_lo, w_hi = stats.wilson_interval(k, n)
        emp.append(k / n)
        lo.append(w_lo)
        hi.append(w_hi)
    bl, bu = bounds(grid)
    return TailCurve(grid=grid, empirical=np.array(emp), ci_lo=np.array(lo),
                     ci_hi=np.array(hi), bound_lower=np.asarray(bl),
                     bound_upper=np.asarray(bu), t=t, replicas=n,
                     samples=samples)


# --------------------------------------------------------------------------
# analytic reference curves

def theorem1_bounds(law: RateLaw, u: float, z) -> tuple[np.ndarray, np.ndarray]:
    """Stretched-exponential bracket for the tagged slowdown tail at level z."""
    d = law.derived()
    z = np.asarray(z, dtype=float)
    expo = law.kappa / (u - d.u_star) * z ** (law.nu + 2.0)
    return np.exp(-expo), np.exp(-expo / d.a_nu)


def theorem2_bounds(law: RateLaw, b) -> tuple[np.ndarray, np.ndarray]:
    """Bracket for the jam front-count tail at level b."""
    d = law.derived()
    b = np.asarray(b, dtype=float)
    core = law.kappa * b ** (law.nu + 2.0)
    lower = np.exp(-d.a_nu * (1.0 + d.u_star) ** (law.nu + 1.0) * core)
    upper = np.exp(-core / d.a_nu)
    return lower, upper


def rost_density(x) -> np.ndarray:
    """Macroscopic jam-outflow density for constant unit rates."""
    x = np.asarray(x, dtype=float)
    return np.clip(0.5 * (1.0 - x), 0.0, 1.0)


# --------------------------------------------------------------------------
# workers (top level: must pickle)

def _tagged_worker(payload) -> int:
    law, u, family, t, seed, idx, zmax = payload
    spec = IIDGapSpec(u=u, family=family)
    counts = sample_tagged_counts_iid(law, spec, t, replica_key(seed, idx),
                                      zmax=zmax)
    return int(counts[0])


def _front_worker(payload) -> int:
    law, t, speed, seed, idx = payload
    return jam_front_count(law, t, speed, replica_key(seed, idx))


def _burke_worker(payload) -> tuple[int, int]:
    law, field_seed, n_labels, a, t, seed, idx = payload
    field = sample_rates(law, 0, n_labels - 1, seed=field_seed)
    rkey = replica_key(seed, idx)
    counts = sample_tagged_counts_equilibrium(field, a, t, rkey, report_rows=1)
    u0 = rng.uniform_array(rng.derive(rkey, rng.STREAM_GAPS),
                           np.array([0], dtype=np.int64))
    gap0 = int(geometric_gaps_from_uniforms(u0, a / field.rates[0])[0])
    eta0_final = gap0 + int(counts[1]) - int(counts[0])
    return int(counts[0]), eta0_final


def _rost_worker(payload) -> np.ndarray:
    t, xs, delta, n_particles, seed, idx = payload
    rates = np.ones(n_particles)
    counts = jam_departure_counts(rates, t, replica_key(seed, idx))
    k = np.arange(1, n_particles + 1, dtype=np.int64)
    positions = (1 - k) + counts
    out = np.empty(len(xs), dtype=np.int64)
    for i, x in enumerate(xs):
        lo, hi = (x - delta) * t, (x + delta) * t
        out[i] = int(np.count_nonzero((positions >= lo) & (positions <= hi)))
    return out


def _gw_worker(payload) -> float:
    rate, a, gamma, t, seed, idx = payload
    m = int(math.floor(a * t**gamma))
    rates = np.full(m + 1, rate)
    counts = jam_departure_counts(rates, t, replica_key(seed, idx))
    position = (1 - (m + 1)) + int(counts[m])
    return (position - rate * t) / (rate * t) ** ((1.0 + gamma) / 2.0)


# --------------------------------------------------------------------------
# ensembles

def tagged_slowdown_ensemble(law: RateLaw, u: float, t: float, replicas: int,
                             seed: int, gap_family: str = "geometric",
                             jobs: int = 1, zmax: float = 3.5) -> np.ndarray:
    """Tagged positions at time t: fresh disorder and gaps per replica."""
    if law.nu <= 0.0:
        raise HypothesisError("tagged slowdown requires nu > 0")
    u_star = critical_gap(law)
    if not u > u_star:
        raise HypothesisError(f"mean gap u={u} must exceed u*={u_star}")
    IIDGapSpec(u=u, family=gap_family)  # validates family/mean compatibility
    payloads = [(law, u, gap_family, t, seed, i, zmax) for i in range(replicas)]
    return np.array(_pmap(_tagged_worker, payloads, jobs), dtype=np.int64)


def front_count_ensemble(law: RateLaw, t: float, replicas: int, seed: int,
                         jobs: int = 1) -> np.ndarray:
    """Jam front counts at time t with fresh disorder per replica."""
    payloads = [(law, t, law.c, seed, i) for i in range(replicas)]
    return np.array(_pmap(_front_worker, payloads, jobs), dtype=np.int64)


# --------------------------------------------------------------------------
# experiments

def theorem1_tail(law: RateLaw, u: float, t: float, z_grid, replicas: int,
                  seed: int = DEFAULT_SEED, gap_family: str = "geometric",
                  jobs: int = 1,
                  samples: Optional[np.ndarray] = None) -> TailCurve:
    """Empirical tail of the normalized tagged slowdown with analytic bracket.

    The statistic is (position_0(t) - c*t) / t^(1-alpha); pass `samples`
    to reuse a precomputed ensemble.
    """
    d = law.derived()
    if samples is None:
        samples = tagged_slowdown_ensemble(law, u, t, replicas, seed,
                                           gap_family=gap_family, jobs=jobs)
    centered = samples - law.c * t
    return _tail_curve(centered, np.asarray(z_grid, dtype=float),
                       t**d.one_minus_alpha, t,
                       lambda z: theorem1_bounds(law, u, z))


def theorem2_front(law: RateLaw, t: float, b_grid, replicas: int,
                   seed: int = DEFAULT_SEED, jobs: int = 1,
                   samples: Optional[np.ndarray] = None) -> TailCurve:
    """Empirical tail of the jam front count with analytic bracket."""
    if law.nu <= 0.0:
        raise HypothesisError("the front-count bracket requires nu > 0")
    d = law.derived()
    if samples is None:
        samples = front_count_ensemble(law, t, replicas, seed, jobs=jobs)
    return _tail_curve(samples, np.asarray(b_grid, dtype=float),
                       t**d.one_minus_alpha, t,
                       lambda b: theorem2_bounds(law, b))


@dataclass
class WindowFrequency:
    t: float
    a: float
    b: float
    frequency: float
    ci_lo: float
    ci_hi: float
    replicas: int

    HEADER = ["t", "a", "b", "frequency", "ci_lo", "ci_hi"]

    def row(self):
        return (self.t, self.a, self.b, self.frequency, self.ci_lo, self.ci_hi)


def theorem3_window(law: RateLaw, t_grid, a_grid, b_grid, replicas: int,
                    seed: int = DEFAULT_SEED, jobs: int = 1) -> list[WindowFrequency]:
    """Bracketing frequencies P(a sqrt(t)/log t <= X_t <= b sqrt(t)) at nu = 0."""
    if law.nu != 0.0:
        raise HypothesisError("this window law holds at nu = 0 only")
    out = []
    for i_t, t in enumerate(sorted(t_grid)):
        xs = front_count_ensemble(law, t, replicas, rng.derive(seed, i_t),
                                  jobs=jobs)
        for a in a_grid:
            for b in b_grid:
                lo = a * math.sqrt(t) / math.log(t)
                hi = b * math.sqrt(t)
                k = int(np.count_nonzero((xs >= lo) & (xs <= hi)))
                w_lo, w_hi = stats.wilson_interval(k, len(xs))
                out.append(WindowFrequency(t=t, a=a, b=b, frequency=k / len(xs),
                                           ci_lo=w_lo, ci_hi=w_hi,
                                           replicas=len(xs)))
    return out


@dataclass
class ExponentBracket:
    fit: ScalingFit
    lower_exponent: float
    upper_exponent: float
    margin: float

    @property
    def inside(self) -> bool:
        return (self.lower_exponent - self.margin <= self.fit.slope
                <= self.upper_exponent + self.margin)


def theorem4_window(law: RateLaw, t_grid, replicas: int,
                    seed: int = DEFAULT_SEED, jobs: int = 1,
                    margin: float = 0.1) -> ExponentBracket:
    """Front-count growth exponent bracket for -1 < nu < 0.

    Fits the median front count across horizons and compares the slope to
    [(1+nu)/(3+nu), (1+nu)/2] widened by the fit margin. The margin covers
    fit noise at desk scale; it is a reporting choice, not an analytic
    constant.
    """
    if not -1.0 < law.nu < 0.0:
        raise HypothesisError("the bracket applies for -1 < nu < 0 only")
    ensembles = {float(t): front_count_ensemble(law, t, replicas,
                                                rng.derive(seed, i_t), jobs=jobs)
                 for i_t, t in enumerate(sorted(t_grid))}
    fit = fit_medians(list(ensembles), ensembles)
    return ExponentBracket(fit=fit,
                           lower_exponent=(1.0 + law.nu) / (3.0 + law.nu),
                           upper_exponent=(1.0 + law.nu) / 2.0,
                           margin=margin)


@dataclass
class Lemma1Point:
    q1: float
    q2: float
    N: float
    empirical: float
    std_error: float
    ci_lo: float
    ci_hi: float
    exact_finite_n: float
    limit: float
    replicas: int

    HEADER = ["q1", "q2", "N", "empirical", "ci_lo", "ci_hi",
              "exact_finite_n", "limit"]

    def row(self):
        return (self.q1, self.q2, self.N, self.empirical, self.ci_lo,
                self.ci_hi, self.exact_finite_n, self.limit)


def lemma1_curve(law: RateLaw, q1_grid, q2_grid, n_grid, replicas: int,
                 seed: int = DEFAULT_SEED) -> list[Lemma1Point]:
    """Scan-event probabilities: Monte Carlo, exact product, and the limit."""
    out = []
    points = [(q1, q2, N) for q1 in q1_grid for q2 in q2_grid for N in n_grid]
    for point_idx, (q1, q2, N) in enumerate(points):
        est = scan_event_probability(law, q1, q2, N, replicas,
                                     rng.derive(seed, point_idx))
        k = round(est.empirical * est.replicas)
        lo, hi = stats.wilson_interval(int(k), est.replicas)
        out.append(Lemma1Point(q1=q1, q2=q2, N=N, empirical=est.empirical,
                               std_error=est.std_error, ci_lo=lo, ci_hi=hi,
                               exact_finite_n=est.exact_finite_n,
                               limit=est.limit, replicas=est.replicas))
    return out


@dataclass
class BurkeResult:
    """Quenched equilibrium study of the tagged particle's jump process."""

    a: float
    t: float
    replicas: int
    increment_mean: float
    increment_target: float
    mean_se: float
    var_mean_ratio: float
    gap_chi2_pvalue: float
    lead_rate: float
    increments: np.ndarray = dc_field(repr=False)
    final_gaps: np.ndarray = dc_field(repr=False)


def burke_study(law: RateLaw, a: float, t: float, n_labels: int,
                replicas: int, seed: int = DEFAULT_SEED,
                jobs: int = 1) -> BurkeResult:
    """Tagged increments and the time-t gap marginal under fixed disorder.

    One disorder field is drawn once and shared by every replica; gaps are
    resampled from the quenched geometric equilibrium per replica. In
    equilibrium the tagged increment is Poisson with mean a*t and the gap
    at a site stays geometric with ratio a/rate.
    """
    field_seed = rng.derive(seed, 0xF1E1D)
    field = sample_rates(law, 0, n_labels - 1, seed=field_seed)
    if float(field.rates.min()) <= a:
        raise HypothesisError("a must sit below every quenched rate in the field")
    payloads = [(law, field_seed, n_labels, a, t, seed, i) for i in range(replicas)]
    results = _pmap(_burke_worker, payloads, jobs)
    incs = np.array([r[0] for r in results], dtype=np.int64)
    gaps = np.array([r[1] for r in results], dtype=np.int64)
    ratio0 = a / float(field.rates[0])
    kmax = max(10, int(math.ceil(math.log(0.5 / replicas) / math.log(ratio0))))
    counts = np.array([(gaps == k).sum() for k in range(kmax)]
                      + [(gaps >= kmax).sum()], dtype=float)
    probs = np.append((1 - ratio0) * ratio0 ** np.arange(kmax), ratio0**kmax)
    _, _, pval = stats.chi_square_gof(counts, probs)
    mean = float(incs.mean())
    return BurkeResult(
        a=a, t=t, replicas=replicas, increment_mean=mean,
        increment_target=a * t,
        mean_se=float(incs.std(ddof=1) / math.sqrt(replicas)),
        var_mean_ratio=float(incs.var(ddof=1) / mean),
        gap_chi2_pvalue=pval, lead_rate=float(field.rates[0]),
        increments=incs, final_gaps=gaps)


@dataclass
class ProfilePoint:
    x: float
    density: float
    std_error: float
    reference: float

    HEADER = ["x", "density", "std_error", "reference"]

    def row(self):
        return (self.x, self.density, self.std_error, self.reference)


def rost_profile(t: float, replicas: int, xs=(-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5),
                 delta: float = 0.05, seed: int = DEFAULT_SEED,
                 jobs: int = 1) -> list[ProfilePoint]:
    """Empirical jam-outflow density at unit rates against the linear profile."""
    xs = [float(x) for x in xs]
    n_particles = int(math.ceil((abs(min(xs)) + delta) * t)) + 8
    payloads = [(t, tuple(xs), delta, n_particles, seed, i) for i in range(replicas)]
    counts = np.array(_pmap(_rost_worker, payloads, jobs), dtype=float)
    width = 2.0 * delta * t + 1.0  # integer sites inside [x-d, x+d] scaled by t
    dens = counts / width
    mean = dens.mean(axis=0)
    se = dens.std(axis=0, ddof=1) / math.sqrt(replicas)
    ref = rost_density(xs)
    return [ProfilePoint(x=x, density=float(mean[i]), std_error=float(se[i]),
                         reference=float(ref[i])) for i, x in enumerate(xs)]


@dataclass
class GlynnWhittPoint:
    t: float
    mean_stat: float
    std_error: float
    target: float
    replicas: int

    HEADER = ["t", "mean_stat", "std_error", "target"]

    def row(self):
        return (self.t, self.mean_stat, self.std_error, self.target)


def glynn_whitt_benchmark(rate: float, a: float, gamma: float, t_grid,
                          replicas: int, seed: int = DEFAULT_SEED,
                          jobs: int = 1) -> list[GlynnWhittPoint]:
    """Constant-rate calibration: normalized depth-a particle deficit.

    The statistic (position of particle floor(a t^gamma) back from the lead
    minus r t) / (r t)^((1+gamma)/2) tends to -2 sqrt(a); convergence is
    slow, so this reports the per-horizon trend rather than asserting the
    limit.
    """
    if not 0.0 < gamma < 1.0:
        raise HypothesisError("gamma must lie in (0, 1)")
    target = -2.0 * math.sqrt(a)
    out = []
    for t in sorted(t_grid):
        payloads = [(rate, a, gamma, float(t), seed, i) for i in range(replicas)]
        vals = np.array(_pmap(_gw_worker, payloads, jobs))
        out.append(GlynnWhittPoint(t=float(t), mean_stat=float(vals.mean()),
                                   std_error=float(vals.std(ddof=1) / math.sqrt(replicas)),
                                   target=target, replicas=replicas))
    return out
