"""Estimators for Lyapunov data and stationary-measure statistics.

Cartan projections of long products are read off renormalized chains of
exterior powers: log(sigma_1...sigma_k)(S_n) equals the top log singular
value of the k-th wedge chain, which stays float-accurate at any n (only
top singular values of unit-norm directions are ever consulted; small
singular values of a renormalized product underflow double precision
long before the desk-scale horizon and are never used).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .engine import (
    MeasureSpec,
    Plugin,
    Requirements,
    run_replicas,
    run_vector_trajectory,
)
from .errors import NotProximal, TooFewPoints, ZeroFunctional
from .reports import DecayReport, decay_report_from_means, decay_report_from_proportions
from .reps import Representation
from .statutil import mean_ci, z_value

__all__ = [
    "LyapunovEstimate",
    "StationarySample",
    "AnticoncentrationReport",
    "lyapunov_top",
    "lyapunov_vector",
    "interior_check",
    "ratio_statistic",
    "kpart_cauchy_curve",
    "stationary_sample",
    "anticoncentration",
    "ldp_tail",
]


@dataclass
class LyapunovEstimate:
    value: object  # float or ndarray of Weyl-chamber coordinates
    half_width: object
    n: int
    replicas: int
    method: str
    extra: Dict[str, object] = field(default_factory=dict)


@dataclass
class StationarySample:
    """Projective points S_n [x] after burn-in, canonical sign, unit norm."""

    points: np.ndarray  # (N, dim)
    rep_label: str
    burn_in: int


# -- plugins ---------------------------------------------------------------------


class TopLogPlugin(Plugin):
    """log sigma_1 of a representation chain."""

    fields = ("log_s1",)

    def __init__(self, key: str, rep: Representation, side: str = "left"):
        self.name = f"top[{key}]"
        self._key = key
        self._rep = rep
        self._side = side

    def requirements(self):
        return Requirements(reps=((self._key, self._rep, self._side),))

    def extract(self, ctx):
        return {"log_s1": ctx.top_log_sv(f"rep:{self._key}")}


class SourceTopPlugin(Plugin):
    fields = ("log_s1",)
    name = "top[src]"

    def extract(self, ctx):
        return {"log_s1": ctx.top_log_sv("src")}


class WedgeSumsPlugin(Plugin):
    """log(sigma_1...sigma_k) of the source product for k = 1..d-1."""

    name = "wedges"

    def __init__(self, d: int):
        self._d = d
        self.fields = tuple(f"l{k}" for k in range(1, d))

    def requirements(self):
        return Requirements(wedge_powers=frozenset(range(2, self._d)))

    def extract(self, ctx):
        sums = ctx.log_sv_sums(range(2, self._d))
        return {f"l{k}": sums[k] for k in range(1, self._d)}


class KPartRowPlugin(Plugin):
    """Row of the right orthogonal factor carrying the highest weight:
    U_n^{-1} v_rho as a unit vector."""

    fields = ("row",)

    def __init__(self, key: str, rep: Representation):
        self.name = f"kpart[{key}]"
        self._key = key
        self._rep = rep

    def requirements(self):
        return Requirements(reps=((self._key, self._rep, "left"),))

    def extract(self, ctx):
        # proximality puts the highest weight on the top singular value, so
        # U_n^{-1} v_rho is the leading right-singular row
        _, _, vt = ctx.svd(f"rep:{self._key}")
        return {"row": vt[:, 0, :]}


# -- Lyapunov estimators ------------------------------------------------------------


def _coords_from_wedge_columns(ds, d: int, n: int) -> np.ndarray:
    """Per-replica Weyl-chamber coordinates (1/n) m(S_n) from wedge sums."""
    sums = [ds.column("wedges", f"l{k}")[-1] for k in range(1, d)]
    coords = [sums[0]]
    for k in range(1, d - 1):
        coords.append(sums[k] - sums[k - 1])
    coords.append(-sums[-1])
    return np.stack(coords, axis=1) / n


def lyapunov_top(
    measure: MeasureSpec,
    rep: Representation,
    n: int,
    replicas: int,
    seed: int,
    threads: int = 1,
    conf: float = 0.95,
) -> LyapunovEstimate:
    """Top Lyapunov exponent of rho(mu), two cross-checked estimators.

    (a) replica mean of (1/n) log sigma_1(rho(S_n));
    (b) time average of log-norm increments along a few long vector
        trajectories, with block-mean confidence intervals.
    The reported value is (a); (b) and a disjointness flag live in extra.
    """
    plugin = TopLogPlugin("r", rep, "left")
    ds = run_replicas(measure, [n], replicas, [plugin], seed, threads)
    a_vals = ds.column(plugin.name, "log_s1")[-1] / n
    a_mean, a_half = mean_ci(a_vals, conf)

    n_traj = min(8, max(1, replicas // 8))
    steps = max(n, int(math.ceil(replicas * n / n_traj)))
    imgs = np.stack([rep.apply_good(a) for a in measure.atoms])
    start = np.zeros(rep.dim)
    try:
        start[rep.highest_weight_index] = 1.0
    except Exception:
        start[0] = 1.0
    block = max(n, 50)
    block_means = []
    b_total = []
    for s in range(n_traj):
        incr = run_vector_trajectory(measure, imgs, start, steps, seed, s)
        b_total.append(incr.mean())
        nb = len(incr) // block
        if nb:
            block_means.append(incr[: nb * block].reshape(nb, block).mean(axis=1))
    b_val = float(np.mean(b_total))
    bm = np.concatenate(block_means)
    b_half = z_value(conf) * float(bm.std(ddof=1) / math.sqrt(len(bm))) if len(bm) > 1 else math.inf
    slack = 1e-9 * max(1.0, abs(a_mean))  # deterministic walks have zero-width CIs
    disjoint = (a_mean + a_half < b_val - b_half - slack) or (
        b_val + b_half < a_mean - a_half - slack
    )
    return LyapunovEstimate(
        a_mean,
        a_half,
        n,
        replicas,
        "sigma1-replica-mean",
        extra={
            "increment_estimate": b_val,
            "increment_half_width": b_half,
            "estimators_disjoint": bool(disjoint),
            "rep": rep.label,
        },
    )


def lyapunov_vector(
    measure: MeasureSpec,
    n: int,
    replicas: int,
    seed: int,
    threads: int = 1,
    conf: float = 0.95,
) -> LyapunovEstimate:
    """Estimate of the Lyapunov vector (1/n) m(S_n), coordinate-wise CIs
    plus simple-root gaps with their own CIs."""
    d = measure.dim
    ds = run_replicas(measure, [n], replicas, [WedgeSumsPlugin(d)], seed, threads)
    coords = _coords_from_wedge_columns(ds, d, n)  # (R, d)
    z = z_value(conf)
    mean = coords.mean(axis=0)
    half = z * coords.std(axis=0, ddof=1) / math.sqrt(replicas)
    gaps = coords[:, :-1] - coords[:, 1:]
    gap_mean = gaps.mean(axis=0)
    gap_half = z * gaps.std(axis=0, ddof=1) / math.sqrt(replicas)
    return LyapunovEstimate(
        mean,
        half,
        n,
        replicas,
        "cartan-vector",
        extra={"gaps": gap_mean, "gap_half_width": gap_half, "confidence": conf},
    )


def interior_check(est: LyapunovEstimate):
    """Per simple root: POSITIVE if the gap CI lies above zero, VIOLATION
    if below (a bug signal for Zariski-dense measures), else INCONCLUSIVE."""
    gaps = np.asarray(est.extra["gaps"], dtype=float)
    half = np.asarray(est.extra["gap_half_width"], dtype=float)
    verdicts = []
    for g, h in zip(gaps, half):
        if g - h > 0:
            verdicts.append("POSITIVE")
        elif g + h < 0:
            verdicts.append("VIOLATION")
        else:
            verdicts.append("INCONCLUSIVE")
    return verdicts


# -- A-part ratio -------------------------------------------------------------------


def ratio_statistic(
    measure: MeasureSpec,
    rep: Representation,
    epsilon: float,
    n_grid: Sequence[int],
    replicas: int,
    seed: int,
    threads: int = 1,
    conf: float = 0.95,
) -> Dict[str, DecayReport]:
    """E[(chi(A_n)/chi_rho(A_n))^eps] per non-highest weight chi.

    A_n is the Cartan A-part of S_n in the source group; weights are
    evaluated on it through the weight table, so the statistic is
    exp(eps * <chi - chi_rho, m(S_n)>).
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    hw = rep.weight_table[rep.highest_weight_index]  # raises AmbiguousHighestWeight
    d = measure.dim
    ds = run_replicas(measure, sorted(set(n_grid)), replicas, [WedgeSumsPlugin(d)], seed, threads)
    ns = ds.n_grid
    sums = {k: ds.column("wedges", f"l{k}") for k in range(1, d)}  # (G, R)
    # m coordinates per grid point per replica
    m_coords = [sums[1]]
    for k in range(2, d):
        m_coords.append(sums[k] - sums[k - 1])
    m_coords.append(-sums[d - 1])
    m_arr = np.stack(m_coords, axis=2)  # (G, R, d)

    out: Dict[str, DecayReport] = {}
    seen = set()
    for w in rep.weight_table:
        if w == hw or w in seen:
            continue
        seen.add(w)
        diff = np.array([wi - hi for wi, hi in zip(w, hw)], dtype=float)
        stat = np.exp(epsilon * (m_arr @ diff))  # (G, R)
        means = stat.mean(axis=1)
        ses = stat.std(axis=1, ddof=1) / math.sqrt(replicas)
        name = "chi=" + ",".join(str(v) for v in w)
        out[name] = decay_report_from_means(name, ns, means, ses, conf)
    return out


# -- K-part convergence ----------------------------------------------------------------


def kpart_cauchy_curve(
    measure: MeasureSpec,
    rep: Representation,
    n_grid: Sequence[int],
    replicas: int,
    seed: int,
    threads: int = 1,
    conf: float = 0.95,
) -> DecayReport:
    """Mean Fubini-Study step delta(U_n^{-1}[v_rho], U_{n+1}^{-1}[v_rho])
    per n, with a fitted decay slope; requires a proximal representation."""
    if not rep.proximal:
        raise NotProximal(f"representation {rep.label} is not proximal")
    ns = sorted(set(int(n) for n in n_grid))
    grid = sorted(set(ns) | {n + 1 for n in ns})
    plugin = KPartRowPlugin("r", rep)
    ds = run_replicas(measure, grid, replicas, [plugin], seed, threads)
    rows = ds.column(plugin.name, "row")  # (G, R, N)
    pos = {n: i for i, n in enumerate(ds.n_grid)}
    means, ses = [], []
    for n in ns:
        r0 = rows[pos[n]]
        r1 = rows[pos[n + 1]]
        dots = np.clip(np.abs(np.einsum("ri,ri->r", r0, r1)), 0.0, 1.0)
        delta = np.sqrt(np.maximum(0.0, 1.0 - dots**2))
        means.append(delta.mean())
        ses.append(delta.std(ddof=1) / math.sqrt(replicas))
    report = decay_report_from_means(f"kpart[{rep.label}]", ns, means, ses, conf)
    report.meta["statistic"] = "fubini-study step of U_n^{-1} highest-weight row"
    return report


def cauchy_tail_check(report: DecayReport, lo: int, hi: int, factor: float = 10.0) -> bool:
    """Partial sums of the step statistic are Cauchy: every empirical tail
    sum inside [lo, hi] is bounded by `factor` times the fitted geometric
    tail.  Requires a successful fit."""
    if report.slope is None or report.slope >= 0:
        return False
    vals = dict(zip(report.ns, report.estimates))
    ns = [n for n in report.ns if lo <= n <= hi]
    rate = math.exp(report.slope)
    for n in ns:
        empirical = sum(v for m, v in vals.items() if m >= n)
        fitted_tail = math.exp(report.intercept + report.slope * n) / (1 - rate)
        if empirical > factor * fitted_tail:
            return False
    return True


# -- stationary samples and anti-concentration ------------------------------------------


def _canonical_rows(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    nz = np.abs(v) > 1e-13
    first = np.argmax(nz, axis=1)
    lead = v[np.arange(len(v)), first]
    sign = np.where(lead < 0, -1.0, 1.0)
    return v * sign[:, None]


def stationary_sample(
    measure: MeasureSpec,
    rep: Representation,
    size: int,
    seed: int,
    functional: Optional[np.ndarray] = None,
    burn_in: int = 50,
    max_doublings: int = 4,
) -> StationarySample:
    """Sample S_n [x] in the projective space of the representation.

    When a functional is supplied, the burn-in is doubled until the
    anti-concentration curve against it moves by less than 10% between
    consecutive doublings.
    """
    from . import kernels
    from .engine import replica_indices

    imgs = np.ascontiguousarray(
        np.stack([rep.apply_good(a) for a in measure.atoms])
    )
    start = np.zeros(rep.dim)
    start[0] = 1.0

    def draw(nsteps: int) -> np.ndarray:
        idx = np.empty((size, nsteps), dtype=np.int64)
        for r in range(size):
            idx[r] = replica_indices(measure, seed, r, nsteps)
        vecs = np.tile(start, (size, 1))
        logs = np.zeros(size)
        kernels.step_vector_chains(imgs, np.ascontiguousarray(idx), vecs, logs, 0, nsteps)
        return _canonical_rows(vecs)

    n = burn_in
    pts = draw(n)
    if functional is not None:
        fnorm = np.asarray(functional, dtype=float)
        fnorm = fnorm / np.linalg.norm(fnorm)
        for _ in range(max_doublings):
            pts2 = draw(2 * n)
            if _curves_close(pts, pts2, fnorm):
                pts = pts2
                n = 2 * n
                break
            pts, n = pts2, 2 * n
    return StationarySample(pts, rep.label, n)


def _curves_close(pts_a, pts_b, fnorm, rtol: float = 0.1) -> bool:
    fa = np.abs(pts_a @ fnorm)
    fb = np.abs(pts_b @ fnorm)
    qs = np.quantile(fb, [0.1, 0.25, 0.5, 0.75])
    for q in qs:
        ca = (fa <= q).mean()
        cb = (fb <= q).mean()
        if cb > 0 and abs(ca - cb) > rtol * cb:
            return False
    return True


@dataclass
class AnticoncentrationReport:
    eps: Tuple[float, ...]
    fraction: Tuple[float, ...]
    counts: Tuple[int, ...]
    alpha: float
    alpha_half_width: float

    def summary(self) -> dict:
        return {
            "eps": [float(e) for e in self.eps],
            "fraction": [float(f) for f in self.fraction],
            "counts": [int(c) for c in self.counts],
            "alpha": float(self.alpha),
            "alpha_half_width": float(self.alpha_half_width),
        }


def anticoncentration(
    sample: StationarySample,
    functional: np.ndarray,
    eps_grid: Optional[Sequence[float]] = None,
    conf: float = 0.95,
    min_count: int = 30,
) -> AnticoncentrationReport:
    """Empirical tail curve eps -> P(|<Z, H-normal>| <= eps) and its fitted
    log-log slope (the Hoelder regularity exponent of the stationary
    measure against the hyperplane)."""
    pts = sample.points
    if len(pts) < 1000:
        raise TooFewPoints(f"need >= 1000 stationary points, have {len(pts)}")
    f = np.asarray(functional, dtype=float)
    nf = np.linalg.norm(f)
    if nf <= 0:
        raise ZeroFunctional("hyperplane functional is zero")
    dist = np.abs(pts @ (f / nf))
    if eps_grid is None:
        q_lo = max(min_count / len(pts), 1e-4)
        lo = float(np.quantile(dist, q_lo))
        hi = float(np.quantile(dist, 0.5))
        if not (0 < lo < hi):
            raise TooFewPoints("degenerate distance distribution; no usable grid")
        eps_grid = np.geomspace(lo, hi, 8)
    eps_grid = np.asarray(sorted(eps_grid), dtype=float)
    counts = np.array([(dist <= e).sum() for e in eps_grid])
    frac = counts / len(pts)
    usable = counts >= min_count
    if usable.sum() < 3:
        raise TooFewPoints("fewer than 3 epsilon bins with enough mass")
    from .statutil import weighted_loglinear_fit

    x = np.log(eps_grid[usable])
    y = frac[usable]
    var = y * (1 - y) / len(pts)
    alpha, _, _, half = weighted_loglinear_fit(x, y, np.maximum(var, 1e-12), conf)
    return AnticoncentrationReport(
        tuple(eps_grid), tuple(frac), tuple(int(c) for c in counts), alpha, half
    )


# -- large deviations -----------------------------------------------------------------


def ldp_tail(
    measure: MeasureSpec,
    rep: Representation,
    epsilon: float,
    n_grid: Sequence[int],
    replicas: int,
    seed: int,
    threads: int = 1,
    conf: float = 0.95,
) -> DecayReport:
    """Empirical P(|(1/n) log sigma_1(rho(S_n)) - L| > eps) with
    Clopper-Pearson intervals; L is estimated internally at the largest n."""
    plugin = TopLogPlugin("r", rep, "left")
    ns = sorted(set(int(n) for n in n_grid))
    ds = run_replicas(measure, ns, replicas, [plugin], seed, threads)
    stats = ds.column(plugin.name, "log_s1") / np.array(ns)[:, None]
    lhat = float(stats[-1].mean())
    hits = [int((np.abs(stats[i] - lhat) > epsilon).sum()) for i in range(len(ns))]
    report = decay_report_from_proportions(
        f"ldp[{rep.label},eps={epsilon:g}]", ns, hits, replicas, conf=conf
    )
    report.meta["lyapunov_estimate"] = lhat
    report.meta["epsilon"] = float(epsilon)
    return report
