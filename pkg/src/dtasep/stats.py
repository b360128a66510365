"""Small statistical helpers shared by the experiment suite."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps

Z95 = 1.959963984540054


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def binomial_se(phat: float, n: int) -> float:
    """Binomial standard error, floored away from zero at boundary counts."""
    return math.sqrt(max(phat * (1.0 - phat), 1.0 / n) / n)


def loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope of log y against log x.

    Returns (slope, intercept, slope_se); the standard error uses the
    residual variance with m - 2 degrees of freedom and is reported as 0
    for a two-point fit.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    m = len(lx)
    if m < 2 or len(ly) != m:
        raise ValueError("need at least two matching points")
    xbar = lx.mean()
    sxx = float(np.sum((lx - xbar) ** 2))
    slope = float(np.sum((lx - xbar) * (ly - ly.mean())) / sxx)
    intercept = float(ly.mean() - slope * xbar)
    if m == 2:
        return slope, intercept, 0.0
    resid = ly - (intercept + slope * lx)
    se = math.sqrt(float(np.sum(resid**2)) / (m - 2) / sxx)
    return slope, intercept, se


def chi_square_gof(observed: np.ndarray, probs: np.ndarray,
                   min_expected: float = 5.0) -> tuple[float, int, float]:
    """Goodness-of-fit chi-square with small expected cells pooled.

    observed: counts per category; probs: model probabilities (should sum
    to ~1, a remainder cell is appended when they do not). Returns
    (statistic, dof, p_value).
    """
    obs = np.asarray(observed, dtype=float)
    p = np.asarray(probs, dtype=float)
    n = obs.sum()
    if abs(p.sum() - 1.0) > 1e-9:
        p = np.append(p, max(0.0, 1.0 - p.sum()))
        obs = np.append(obs, 0.0)
    exp = p * n
    # pool consecutive cells until each pooled cell has enough mass
    pooled_obs, pooled_exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        if pooled_exp:
            pooled_obs[-1] += acc_o
            pooled_exp[-1] += acc_e
        else:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
    po = np.asarray(pooled_obs)
    pe = np.asarray(pooled_exp)
    if len(po) < 2:
        raise ValueError("not enough mass to form two chi-square cells")
    stat = float(np.sum((po - pe) ** 2 / pe))
    dof = len(po) - 1
    return stat, dof, float(sps.chi2.sf(stat, dof))


def ks_exponential(samples: np.ndarray, rate: float) -> float:
    """One-sample Kolmogorov-Smirnov p-value against Exp(rate)."""
    return float(sps.kstest(samples, "expon", args=(0.0, 1.0 / rate)).pvalue)


def dkw_band(n: int, level: float) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band at the given level."""
    return math.sqrt(math.log(2.0 / level) / (2.0 * n))


def empirical_cdf_distance(samples: np.ndarray, cdf) -> float:
    """sup |F_n - F| over the sample points (both one-sided parts)."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    fx = np.asarray(cdf(xs), dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - fx)
    lower = np.max(fx - np.arange(0, n) / n)
    return float(max(upper, lower))
