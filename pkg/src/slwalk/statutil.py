"""Confidence intervals and log-linear decay fitting."""

from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

_Z = {0.95: 1.959963984540054, 0.99: 2.5758293035489004}


def z_value(conf: float) -> float:
    return _Z.get(conf, float(stats.norm.ppf(0.5 + conf / 2.0)))


def mean_ci(values: np.ndarray, conf: float = 0.95) -> Tuple[float, float]:
    """Normal-approximation CI for the mean of bounded-increment statistics."""
    values = np.asarray(values, dtype=float)
    m = float(values.mean())
    if values.size < 2:
        return m, math.inf
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    return m, z_value(conf) * se


def clopper_pearson(k: int, n: int, conf: float = 0.95) -> Tuple[float, float]:
    """Exact binomial CI."""
    if n <= 0:
        return 0.0, 1.0
    alpha = 1.0 - conf
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def one_sided_upper(n: int, conf: float = 0.95) -> float:
    """Upper bound on a probability after observing zero hits in n trials."""
    if n <= 0:
        return 1.0
    return 1.0 - (1.0 - conf) ** (1.0 / n)


def weighted_loglinear_fit(
    ns: Sequence[float],
    values: Sequence[float],
    variances: Optional[Sequence[float]] = None,
    conf: float = 0.95,
):
    """Weighted least squares of log(values) against n.

    variances are of the values themselves; the delta method maps them to
    log scale.  Returns (slope, intercept, r2, slope_half_width).  All
    points must be strictly positive.
    """
    x = np.asarray(ns, dtype=float)
    y = np.asarray(values, dtype=float)
    if np.any(y <= 0):
        raise ValueError("log-linear fit needs positive values")
    ly = np.log(y)
    if variances is None:
        w = np.ones_like(ly)
    else:
        var_log = np.asarray(variances, dtype=float) / y**2
        w = 1.0 / np.maximum(var_log, 1e-12)
    s0 = w.sum()
    sx = (w * x).sum()
    sxx = (w * x * x).sum()
    sy = (w * ly).sum()
    sxy = (w * x * ly).sum()
    delta = s0 * sxx - sx * sx
    if delta <= 0:
        raise ValueError("degenerate fit grid")
    slope = (s0 * sxy - sx * sy) / delta
    intercept = (sxx * sy - sx * sxy) / delta
    yhat = intercept + slope * x
    ybar = sy / s0
    ss_res = float((w * (ly - yhat) ** 2).sum())
    ss_tot = float((w * (ly - ybar) ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-30 else 1.0 - ss_res / ss_tot
    slope_se = math.sqrt(s0 / delta)
    if variances is None:
        # fall back to residual-based error if no variances supplied
        dof = max(len(x) - 2, 1)
        slope_se = math.sqrt(max(ss_res / dof, 1e-30) * s0 / delta)
    return slope, intercept, r2, z_value(conf) * slope_se


def geometric_grid(lo: int, hi: int, factor: float = 2.0) -> Tuple[int, ...]:
    out = []
    n = lo
    while n < hi:
        out.append(int(round(n)))
        n *= factor
    out.append(hi)
    return tuple(sorted(set(out)))
