"""Rate disorder: the parametric jump-rate distribution and its statistics.

The rate law is a power-law window on (c, c+eps] with density
kappa*(nu+1)*(p-c)**nu, plus an atom at p = 1 carrying whatever mass the
window leaves over. Jump rates attached to particles are i.i.d. draws from
this law, addressed by particle label through counter-based streams, so any
label window regenerates bit-identically from (law, seed).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy import integrate

from . import rng, _kernels
from .errors import HypothesisError

_ADMISSIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class RateLaw:
    """Distribution of intrinsic jump rates, supported on (c, 1].

    c:     left endpoint of the support, in (0, 1)
    nu:    tail exponent of the cdf at c+, in (-1, inf)
    kappa: tail constant, > 0
    eps:   width of the power-law window, in (0, 1-c]
    """

    c: float
    nu: float
    kappa: float
    eps: float

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        if not self.nu > -1.0:
            raise ValueError(f"nu must exceed -1, got {self.nu}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not 0.0 < self.eps <= 1.0 - self.c:
            raise ValueError(f"eps must lie in (0, 1-c], got {self.eps}")
        if self.window_mass > 1.0 + _ADMISSIBILITY_SLACK:
            raise ValueError(
                "kappa * eps**(nu+1) = %g exceeds 1: power-law window "
                "carries more than unit mass" % self.window_mass
            )

    @property
    def window_mass(self) -> float:
        """Probability carried by the power-law window (c, c+eps]."""
        return self.kappa * self.eps ** (self.nu + 1.0)

    @property
    def top_mass(self) -> float:
        """Probability of the atom at p = 1."""
        return max(0.0, 1.0 - self.window_mass)

    def cdf(self, p):
        """F(p), vectorized; right-continuous with F(c) = 0 and F(1) = 1."""
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        in_window = (p > self.c) & (p <= self.c + self.eps)
        out[in_window] = self.kappa * (p[in_window] - self.c) ** (self.nu + 1.0)
        out[p > self.c + self.eps] = self.window_mass
        out[p >= 1.0] = 1.0
        return out if out.ndim else float(out)

    def quantile(self, u):
        """Inverse transform: rate at cdf level u in (0, 1], vectorized."""
        u = np.asarray(u, dtype=float)
        scaled = np.minimum(u / self.window_mass, 1.0)
        rates = self.c + self.eps * scaled ** (1.0 / (self.nu + 1.0))
        out = np.where(u <= self.window_mass, rates, 1.0)
        return out if out.ndim else float(out)

    def mean_rate(self) -> float:
        """E[p] under the law (window moment plus the atom)."""
        w, _ = integrate.quad(
            lambda q: (self.c + q) * self.kappa * (self.nu + 1.0) * q**self.nu,
            0.0, self.eps, epsabs=1e-12, epsrel=1e-12,
        )
        return w + self.top_mass

    def derived(self) -> "DerivedConstants":
        return DerivedConstants.from_law(self)

    def to_config(self) -> dict:
        return {"c": self.c, "nu": self.nu, "kappa": self.kappa, "eps": self.eps}

    @classmethod
    def from_config(cls, d: dict) -> "RateLaw":
        return cls(c=float(d["c"]), nu=float(d["nu"]),
                   kappa=float(d["kappa"]), eps=float(d["eps"]))


@dataclass(frozen=True)
class DerivedConstants:
    """Analytic constants determined by the rate law alone."""

    alpha: float
    one_minus_alpha: float
    a_nu: float
    u_star: float
    rho_star: float

    @classmethod
    def from_law(cls, law: RateLaw) -> "DerivedConstants":
        alpha = 1.0 / (law.nu + 2.0)
        a_nu = (law.nu + 2.0) ** (law.nu + 2.0) / (law.nu + 1.0) ** (law.nu + 1.0)
        u_star = critical_gap(law)
        rho_star = 0.0 if math.isinf(u_star) else 1.0 / (1.0 + u_star)
        return cls(alpha=alpha, one_minus_alpha=1.0 - alpha,
                   a_nu=a_nu, u_star=u_star, rho_star=rho_star)


@dataclass(frozen=True)
class DisorderField:
    """A realized window of quenched rates, keyed by particle label."""

    law: RateLaw
    seed: int
    first_label: int
    rates: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        self.rates.setflags(write=False)

    @property
    def last_label(self) -> int:
        return self.first_label + len(self.rates) - 1

    def labels(self) -> np.ndarray:
        return np.arange(self.first_label, self.first_label + len(self.rates))

    def covers(self, label: int) -> bool:
        return self.first_label <= label <= self.last_label

    def rate(self, label: int) -> float:
        if not self.covers(label):
            raise KeyError(f"label {label} outside field window "
                           f"[{self.first_label}, {self.last_label}]")
        return float(self.rates[label - self.first_label])

    def rate_window(self, first: int, last: int) -> np.ndarray:
        if first < self.first_label or last > self.last_label:
            raise KeyError(f"window [{first}, {last}] outside field window "
                           f"[{self.first_label}, {self.last_label}]")
        i = first - self.first_label
        return self.rates[i:i + (last - first + 1)]

    def extended(self, first: int, last: int) -> "DisorderField":
        """Regenerate over a different window; overlaps are bit-identical."""
        return sample_rates(self.law, first, last, self.seed)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "rate"])
            for lab, r in zip(self.labels(), self.rates):
                w.writerow([int(lab), repr(float(r))])


def rate_stream_key(seed: int) -> int:
    """Key of the per-label rate stream belonging to a field seed."""
    return rng.derive(seed, rng.STREAM_RATES)


def sample_rates(law: RateLaw, first_label: int, last_label: int, seed: int) -> DisorderField:
    """Draw i.i.d. rates for every label in [first_label, last_label].

    Each label's rate is the inverse transform of a counter-based uniform,
    so the draw at a label depends only on (seed, label).
    """
    if last_label < first_label:
        raise ValueError("empty label range")
    labels = np.arange(first_label, last_label + 1, dtype=np.int64)
    u = rng.uniform_array(rate_stream_key(seed), labels)
    return DisorderField(law=law, seed=seed, first_label=first_label,
                         rates=law.quantile(u))


def critical_gap(law: RateLaw) -> float:
    """Largest mean gap the geometric product equilibria can sustain.

    Closed form of the integral of c/(p-c) against the law; infinite
    exactly when nu <= 0.
    """
    if law.nu <= 0.0:
        return math.inf
    window = law.c * law.kappa * (law.nu + 1.0) / law.nu * law.eps**law.nu
    atom = law.top_mass * law.c / (1.0 - law.c)
    return window + atom


def critical_gap_quadrature(law: RateLaw) -> float:
    """Adaptive-quadrature cross-check of `critical_gap` (finite case).

    Integrates c*kappa*(nu+1)*q**(nu-1) over the window after the
    substitution q = p - c that exposes the integrable singularity.
    """
    if law.nu <= 0.0:
        return math.inf
    window, _ = integrate.quad(
        lambda q: law.c * law.kappa * (law.nu + 1.0),
        0.0, law.eps, weight="alg", wvar=(law.nu - 1.0, 0.0),
        epsabs=1e-10, epsrel=1e-12, limit=200,
    )
    return window + law.top_mass * law.c / (1.0 - law.c)


def _window_velocity_integral(law: RateLaw, a: float, lower_q: float = 0.0) -> float:
    """Integral of a/(p-a) over the power-law window above c + lower_q."""
    if a == 0.0 or lower_q >= law.eps:
        return 0.0
    scale = a * law.kappa * (law.nu + 1.0)
    if lower_q == 0.0:
        # weight q**nu tames the endpoint singularity exactly
        val, _ = integrate.quad(
            lambda q: scale / (q + law.c - a),
            0.0, law.eps, weight="alg", wvar=(law.nu, 0.0),
            epsabs=1e-10, epsrel=1e-12, limit=200,
        )
    else:
        val, _ = integrate.quad(
            lambda q: scale * q**law.nu / (q + law.c - a),
            lower_q, law.eps, epsabs=1e-10, epsrel=1e-12, limit=200,
        )
    return val


def velocity_to_gap(law: RateLaw, a: float, fastening: Optional[float] = None) -> float:
    """Mean equilibrium gap of the law at common particle velocity a.

    With `fastening` r, rates are floored at r before the gap integral
    (requires a < r). Without it, a must lie in [0, c]; a = c gives the
    critical gap, possibly infinite.
    """
    if fastening is not None and fastening > law.c:
        r = fastening
        if not 0.0 <= a < r:
            raise HypothesisError(f"velocity a={a} must lie in [0, fastening={r})")
        if a == 0.0:
            return 0.0
        floored = float(law.cdf(r)) * a / (r - a)
        window = _window_velocity_integral(law, a, lower_q=r - law.c)
        atom = law.top_mass * a / (1.0 - a)
        return floored + window + atom
    if not 0.0 <= a <= law.c:
        raise HypothesisError(f"velocity a={a} outside [0, c={law.c}]")
    if a == 0.0:
        return 0.0
    if a == law.c:
        return critical_gap(law)
    return _window_velocity_integral(law, a) + law.top_mass * a / (1.0 - a)


def gap_to_velocity(law: RateLaw, u: float) -> float:
    """Velocity whose equilibrium mean gap is u, by monotone bisection.

    Defined for laws with a finite critical gap and 0 <= u < u*.
    """
    u_star = critical_gap(law)
    if math.isinf(u_star):
        raise HypothesisError("gap_to_velocity needs a finite critical gap (nu > 0)")
    if not 0.0 <= u < u_star:
        raise HypothesisError(f"mean gap u={u} outside [0, u*={u_star})")
    if u == 0.0:
        return 0.0
    lo, hi = 0.0, law.c
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if velocity_to_gap(law, mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def slow_scan(field: DisorderField, threshold: float, direction: int = 1) -> Optional[int]:
    """Smallest k >= 0 with rate(direction*k) <= threshold, or None.

    None means the stored window was exhausted without a hit; the caller
    decides whether to extend the field.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if not field.covers(0):
        raise ValueError("scan starts at label 0, which the field does not cover")
    if direction == 1:
        rates = field.rate_window(0, field.last_label)
    else:
        rates = field.rate_window(field.first_label, 0)[::-1]
    hits = np.nonzero(rates <= threshold)[0]
    return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class ScanEstimate:
    """Monte Carlo and exact values for the no-slow-rate event."""

    empirical: float
    std_error: float
    exact_finite_n: float
    limit: float
    replicas: int
    scan_length: int
    threshold: float


def scan_event_probability(law: RateLaw, q1: float, q2: float, N: float,
                           replicas: int, seed: int) -> ScanEstimate:
    """Probability that no rate in the scan prefix falls below the threshold.

    The event: all rates at labels 0 .. floor(q1*N**(1-alpha)) - 1 exceed
    c + q2*N**(-alpha). Returns the Monte Carlo frequency over fresh
    disorder fields with its binomial standard error, the exact finite-N
    product (1 - F(threshold))**floor(q1*N**(1-alpha)), and the large-N
    limit exp(-kappa*q1*q2**(nu+1)).
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    d = law.derived()
    threshold = law.c + q2 * N ** (-d.alpha)
    m = int(math.floor(q1 * N ** (1.0 - d.alpha)))
    p_hit = float(law.cdf(threshold))
    exact = (1.0 - p_hit) ** m
    limit = math.exp(-law.kappa * q1 * q2 ** (law.nu + 1.0))
    hits = 0
    for r in range(replicas):
        rkey = rng.derive(seed, rng.STREAM_REPLICA, r)
        key = rate_stream_key(rkey)
        j = _kernels.scan_first_hit(np.uint64(key), p_hit, m)
        if j >= m:
            hits += 1
    emp = hits / replicas
    se = math.sqrt(max(emp * (1.0 - emp), 1.0 / replicas) / replicas)
    return ScanEstimate(empirical=emp, std_error=se, exact_finite_n=exact,
                        limit=limit, replicas=replicas, scan_length=m,
                        threshold=threshold)
