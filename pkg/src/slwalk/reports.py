"""Decay and trace-growth reports with their serialization.

Verdict rules: EXPONENTIAL_DECAY requires the fitted slope's CI upper
bound below zero and weighted r^2 >= 0.8; NO_DECAY means no significant
negative slope while the curve stays bounded away from zero; everything
else (including curves that fall below Monte Carlo resolution) is
INCONCLUSIVE with one-sided bounds reported for the zero grid points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import IoError
from .statutil import (
    clopper_pearson,
    one_sided_upper,
    weighted_loglinear_fit,
)

R2_THRESHOLD = 0.8


def _f17(x) -> str:
    return format(float(x), ".17g")


@dataclass
class DecayReport:
    label: str
    ns: Tuple[int, ...]
    estimates: Tuple[float, ...]
    ci_lo: Tuple[float, ...]
    ci_hi: Tuple[float, ...]
    exact: Dict[int, Fraction] = field(default_factory=dict)
    slope: Optional[float] = None
    intercept: Optional[float] = None
    r2: Optional[float] = None
    slope_half_width: Optional[float] = None
    verdict: str = "INCONCLUSIVE"
    below_resolution: bool = False
    zero_counts: int = 0
    zero_upper_bounds: Dict[int, float] = field(default_factory=dict)
    discrepant: bool = False
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def slope_ci(self) -> Tuple[Optional[float], Optional[float]]:
        if self.slope is None:
            return None, None
        return self.slope - self.slope_half_width, self.slope + self.slope_half_width

    def summary(self) -> dict:
        lo, hi = self.slope_ci
        return {
            "label": self.label,
            "verdict": self.verdict,
            "slope": None if self.slope is None else float(self.slope),
            "slope_ci": [None if lo is None else float(lo), None if hi is None else float(hi)],
            "intercept": None if self.intercept is None else float(self.intercept),
            "r2": None if self.r2 is None else float(self.r2),
            "below_resolution": self.below_resolution,
            "zero_grid_points": self.zero_counts,
            "zero_upper_bounds": {str(k): float(v) for k, v in sorted(self.zero_upper_bounds.items())},
            "discrepant": self.discrepant,
            "exact": {str(k): str(v) for k, v in sorted(self.exact.items())},
            "meta": {k: self.meta[k] for k in sorted(self.meta)},
        }


def decay_report_from_proportions(
    label: str,
    ns: Sequence[int],
    hits: Sequence[int],
    trials: int,
    exact: Optional[Dict[int, Fraction]] = None,
    conf: float = 0.95,
) -> DecayReport:
    ns = [int(n) for n in ns]
    hits = [int(k) for k in hits]
    phat = [k / trials for k in hits]
    cis = [clopper_pearson(k, trials, conf) for k in hits]
    exact = dict(exact or {})
    discrepant = any(
        n in exact and not (cis[i][0] <= float(exact[n]) <= cis[i][1])
        for i, n in enumerate(ns)
    )
    # variance floor of one hit keeps degenerate p=1 points from dominating
    variances = [max(p * (1 - p) / trials, 1.0 / trials**2) for p in phat]
    return _finalize(
        label, ns, phat,
        [c[0] for c in cis], [c[1] for c in cis],
        variances, exact, discrepant, conf,
        zero_bound=lambda n: one_sided_upper(trials, conf),
    )


def decay_report_from_means(
    label: str,
    ns: Sequence[int],
    means: Sequence[float],
    std_errs: Sequence[float],
    conf: float = 0.95,
) -> DecayReport:
    from .statutil import z_value

    z = z_value(conf)
    ns = [int(n) for n in ns]
    means = [float(v) for v in means]
    lo = [v - z * s for v, s in zip(means, std_errs)]
    hi = [v + z * s for v, s in zip(means, std_errs)]
    variances = [s * s for s in std_errs]
    return _finalize(
        label, ns, means, lo, hi, variances, {}, False, conf,
        zero_bound=lambda n: float("nan"),
    )


def _finalize(label, ns, values, lo, hi, variances, exact, discrepant, conf, zero_bound):
    pos = [i for i, v in enumerate(values) if v > 0]
    zeros = [i for i, v in enumerate(values) if v <= 0]
    report = DecayReport(
        label=label,
        ns=tuple(ns),
        estimates=tuple(values),
        ci_lo=tuple(lo),
        ci_hi=tuple(hi),
        exact=exact,
        zero_counts=len(zeros),
        zero_upper_bounds={ns[i]: zero_bound(ns[i]) for i in zeros},
        discrepant=discrepant,
    )
    if len(pos) < 3 or len(zeros) > len(ns) / 2:
        report.below_resolution = len(zeros) > 0
        report.verdict = "INCONCLUSIVE"
        return report
    slope, intercept, r2, half = weighted_loglinear_fit(
        [ns[i] for i in pos],
        [values[i] for i in pos],
        [max(variances[i], 1e-30) for i in pos],
        conf,
    )
    report.slope = slope
    report.intercept = intercept
    report.r2 = r2
    report.slope_half_width = half
    report.below_resolution = len(zeros) > 0
    if slope + half < 0 and r2 >= R2_THRESHOLD:
        report.verdict = "EXPONENTIAL_DECAY"
    elif slope + half >= 0 and min(lo[i] for i in pos) > 0 and not zeros:
        report.verdict = "NO_DECAY"
    else:
        report.verdict = "INCONCLUSIVE"
    return report


@dataclass
class TraceGrowthReport:
    """Quantile fan of (1/n) log |Tr(rho(S_n) A)| with exceedance curves."""

    label: str
    ns: Tuple[int, ...]
    quantiles: Dict[str, Tuple[float, ...]]  # q05, q25, q50, q75, q95
    zero_trace: Tuple[int, ...]
    replicas: int
    target: float
    target_half_width: float
    median_band: float  # half the IQR of the statistic at the last grid step
    exceedance: Dict[str, DecayReport] = field(default_factory=dict)
    piece_estimates: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    meta: Dict[str, object] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "label": self.label,
            "target": float(self.target),
            "target_half_width": float(self.target_half_width),
            "median_final": float(self.quantiles["q50"][-1]),
            "median_band": float(self.median_band),
            "zero_trace": list(self.zero_trace),
            "replicas": self.replicas,
            "piece_estimates": {
                k: [float(v[0]), float(v[1])] for k, v in sorted(self.piece_estimates.items())
            },
            "exceedance": {k: v.summary() for k, v in sorted(self.exceedance.items())},
            "meta": {k: self.meta[k] for k in sorted(self.meta)},
        }


# -- serialization ----------------------------------------------------------------


def decay_csv(report: DecayReport) -> str:
    lines = ["n,estimate,ci_lo,ci_hi,exact"]
    for i, n in enumerate(report.ns):
        ex = ""
        if n in report.exact:
            ex = _f17(float(report.exact[n]))
        lines.append(
            f"{n},{_f17(report.estimates[i])},{_f17(report.ci_lo[i])},{_f17(report.ci_hi[i])},{ex}"
        )
    return "\n".join(lines) + "\n"


def trace_csv(report: TraceGrowthReport) -> str:
    lines = ["n,q05,q25,q50,q75,q95,zero_trace"]
    for i, n in enumerate(report.ns):
        row = [str(n)]
        for q in ("q05", "q25", "q50", "q75", "q95"):
            row.append(_f17(report.quantiles[q][i]))
        row.append(str(report.zero_trace[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_text(path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def json_text(payload: dict) -> str:
    def default(obj):
        if isinstance(obj, Fraction):
            return str(obj)
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        raise TypeError(f"cannot serialize {type(obj)!r}")

    return json.dumps(payload, sort_keys=True, indent=2, default=default) + "\n"
