"""Headline experiments: escape curves, trace growth, Lyapunov separation,
and genericity (freeness + Zariski-density witness) for paired walks.

Membership decisions prefer exact integer arithmetic (available for all
bundled presets); the float route uses condition-aware relative
thresholds and is cross-checked against the exact one by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .engine import MeasureSpec, Plugin, Requirements, run_replicas
from .errors import (
    DimensionMismatch,
    UnknownPieces,
    WordBudgetExceeded,
)
from .linearize import LinearizedVariety, exact_linear_data, membership
from .matkit import SquareMatrix, as_array, exact_inverse
from .oracle import (
    PolynomialPredicate,
    exact_event_curve,
    exact_orbit_escape_curve,
)
from .polynomials import EntryPolynomial
from .reports import (
    DecayReport,
    TraceGrowthReport,
    decay_report_from_proportions,
)
from .reps import Representation
from .spectral import TopLogPlugin
from .statutil import mean_ci, z_value

_MEMBER_RTOL = 1e-9


# -- membership plugin ---------------------------------------------------------------


def _integerized_terms(poly):
    """(scaled integer coefficient, exponent) pairs and the common multiplier."""
    denom = 1
    for c in poly.terms.values():
        denom = denom * c.denominator // math.gcd(denom, c.denominator)
    terms = [(int(c * denom), exps) for exps, c in poly.terms.items()]
    return terms, denom


class MembershipPlugin(Plugin):
    """Per-replica membership of S_n in a variety.

    Exact mode evaluates the defining polynomial on the exact integer
    mirror of the product (zero test is exact); float mode reconstructs
    the product and compares against the sum of absolute monomial
    contributions.
    """

    fields = ("hit",)

    def __init__(self, variety, measure: MeasureSpec, name: str = "member"):
        self.name = name
        self.variety = variety
        self.exact_mode = measure.exact
        if isinstance(variety, EntryPolynomial):
            self.poly = variety
            self.orbit = None
        elif isinstance(variety, LinearizedVariety):
            self.poly = variety.source_poly
            self.orbit = variety.orbit
        else:
            raise TypeError(f"unsupported variety type {type(variety)!r}")
        if self.poly is None and self.orbit is None:
            self.exact_mode = False  # learned linearization: float linear route only
        if self.poly is not None:
            self._terms, self._tden = _integerized_terms(self.poly.poly)
            self._deg = self.poly.poly.degree
        elif self.orbit is not None:
            self._terms, self._tden = _integerized_terms(self.orbit.poly)
            self._deg = self.orbit.poly.degree
            xf = [Fraction(v) for v in self.orbit.x]
            xden = 1
            for v in xf:
                xden = xden * v.denominator // math.gcd(xden, v.denominator)
            self._x_num = np.array([int(v * xden) for v in xf], dtype=object)
            self._x_den = xden

    def requirements(self):
        return Requirements(exact=self.exact_mode)

    def extract(self, ctx):
        if self.exact_mode:
            return {"hit": self._exact_hits(ctx)}
        return {"hit": self._float_hits(ctx)}

    def _exact_hits(self, ctx):
        nums, dens = ctx.exact_products()
        B, d, _ = nums.shape
        if self.poly is not None:
            flat = nums.reshape(B, d * d)
            scale = dens
        else:
            flat = nums.astype(object) @ self._x_num  # (B, d): S_n x numerators
            scale = dens * self._x_den
        total = np.zeros(B, dtype=object)
        total[:] = 0
        for coeff, exps in self._terms:
            term = np.full(B, coeff, dtype=object)
            term = term * scale ** (self._deg - sum(exps))
            for i, e in enumerate(exps):
                if e:
                    term = term * flat[:, i] ** e
            total = total + term
        return np.array([v == 0 for v in total], dtype=np.float64)

    def _float_hits(self, ctx):
        dirs, logs = ctx.chain("src")
        full = dirs * np.exp(logs)[:, None, None]
        if self.poly is not None:
            val, scale = self.poly.value_batch(full)
        elif self.orbit is not None:
            x = np.array([float(v) for v in self.orbit.x])
            gx = full @ x
            val, scale = self.orbit.poly.evaluate_batch(gx)
        else:
            v = self.variety
            img = np.stack([v.rep.apply_float(m) for m in full])
            vals = img @ v.start_vector
            val = vals @ v.functional
            scale = np.abs(img) @ np.abs(v.start_vector) @ np.abs(v.functional)
        return (np.abs(val) <= _MEMBER_RTOL * (scale + 1e-300)).astype(np.float64)


# -- escape curves ---------------------------------------------------------------------


def _merge_exact(measure, variety, ns, budget):
    """Exact p_n from the enumeration oracle for grid points within budget."""
    within = [n for n in ns if measure.n_atoms**n <= budget]
    if not within or not measure.exact:
        return {}
    if isinstance(variety, LinearizedVariety) and variety.orbit is not None:
        from .oracle import exact_source_orbit_curve

        return exact_source_orbit_curve(measure, variety.orbit, within, budget)
    data = exact_linear_data(variety, measure) if isinstance(variety, LinearizedVariety) else None
    if data is not None:
        anums, start, functional = data
        return exact_orbit_escape_curve(measure, anums, start, functional, within, budget)
    poly = variety if isinstance(variety, EntryPolynomial) else variety.source_poly
    if poly is None:
        return {}
    return exact_event_curve(measure, PolynomialPredicate(poly), within, budget)


def escape_curve(
    measure: MeasureSpec,
    variety,
    n_grid: Sequence[int],
    replicas: int,
    seed: int,
    threads: int = 1,
    budget: int = 2_000_000,
    conf: float = 0.95,
) -> DecayReport:
    """Monte Carlo escape probabilities p_n = P(S_n in V) with
    Clopper-Pearson intervals, exact enumeration merged in for all grid
    points within budget, and a log-linear decay fit."""
    plugin = MembershipPlugin(variety, measure)
    ds = run_replicas(measure, n_grid, replicas, [plugin], seed, threads)
    hits = ds.column(plugin.name, "hit").sum(axis=1).astype(int)
    exact = _merge_exact(measure, variety, ds.n_grid, budget)
    label = getattr(variety, "label", "variety")
    report = decay_report_from_proportions(
        f"escape[{label}]", ds.n_grid, hits, replicas, exact, conf
    )
    report.meta["measure"] = measure.label
    report.meta["replicas"] = replicas
    report.meta["seed"] = seed
    report.meta["membership"] = "exact" if plugin.exact_mode else "float"
    return report


# -- trace growth -----------------------------------------------------------------------


class TraceStatPlugin(Plugin):
    """log |functional(rho(S~_n) start)| where S~ honors the variety twist;
    exact zeros are detected separately and never logged."""

    fields = ("logval", "zero")

    def __init__(self, variety: LinearizedVariety, name: str = "trace"):
        if not isinstance(variety.rep, Representation):
            raise UnknownPieces("trace growth needs an analytic linearization")
        self.name = name
        self.variety = variety
        rep = variety.rep
        c = rep.good_scale
        self._start = c * variety.start_vector
        self._functional = variety.functional / c
        self._side = "left" if variety.twist == "none" else "right_inv"

    def requirements(self):
        return Requirements(reps=(("tr", self.variety.rep, self._side),))

    def extract(self, ctx):
        dirs, logs = ctx.chain("rep:tr")
        vals = np.einsum("i,rij,j->r", self._functional, dirs, self._start)
        zero = np.abs(vals) < 1e-300
        safe = np.where(zero, 1.0, np.abs(vals))
        return {"logval": logs + np.log(safe), "zero": zero.astype(np.float64)}


class PieceTopPlugin(Plugin):
    """Top log singular value of each irreducible block of a rep chain."""

    def __init__(self, rep: Representation, side: str = "left", name: str = "pieces"):
        self.name = name
        self.rep = rep
        self.fields = tuple(f"p{i}" for i in range(len(rep.pieces)))
        self._side = side

    def requirements(self):
        return Requirements(reps=(("tr", self.rep, self._side),))

    def extract(self, ctx):
        dirs, logs = ctx.chain("rep:tr")
        out = {}
        for i, piece in enumerate(self.rep.pieces):
            block = dirs[:, piece.start : piece.stop, piece.start : piece.stop]
            s1 = np.linalg.svd(block, compute_uv=False)[:, 0]
            out[f"p{i}"] = logs + np.log(s1)
        return out


def trace_growth(
    measure: MeasureSpec,
    variety: LinearizedVariety,
    n_grid: Sequence[int],
    replicas: int,
    seed: int,
    threads: int = 1,
    eps_fractions: Sequence[float] = (0.05, 0.1, 0.2),
    conf: float = 0.95,
) -> TraceGrowthReport:
    """Quantile fan of (1/n) log |Tr(rho(S_n) A)| with the distinguished
    piece's Lyapunov estimate as target and exceedance decay curves."""
    if not variety.pieces_known:
        raise UnknownPieces("variety has no recorded irreducible pieces")
    tr = TraceStatPlugin(variety)
    pieces = PieceTopPlugin(variety.rep, side=tr._side)
    plugins: List[Plugin] = [tr, pieces]
    exact_member = None
    if measure.exact and (variety.source_poly is not None or variety.orbit is not None):
        exact_member = MembershipPlugin(variety, measure, name="exactzero")
        plugins.append(exact_member)
    ds = run_replicas(measure, n_grid, replicas, plugins, seed, threads)
    ns = ds.n_grid
    narr = np.array(ns, dtype=float)[:, None]
    stat = ds.column(tr.name, "logval") / narr  # (G, R)
    zero = ds.column(tr.name, "zero") > 0.5
    if exact_member is not None and variety.twist == "none":
        zero = ds.column(exact_member.name, "hit") > 0.5

    qlabels = {"q05": 0.05, "q25": 0.25, "q50": 0.5, "q75": 0.75, "q95": 0.95}
    quantiles = {k: [] for k in qlabels}
    zero_counts = []
    for gi in range(len(ns)):
        vals = stat[gi][~zero[gi]]
        zero_counts.append(int(zero[gi].sum()))
        for k, q in qlabels.items():
            quantiles[k].append(float(np.quantile(vals, q)) if len(vals) else math.nan)

    # per-piece Lyapunov estimates at the last grid step
    piece_est = {}
    nmax = ns[-1]
    for i, piece in enumerate(variety.rep.pieces):
        vals = ds.column(pieces.name, f"p{i}")[-1] / nmax
        m, h = mean_ci(vals, conf)
        piece_est[f"{i}:{piece.label}"] = (m, h)
    target_key = max(piece_est, key=lambda k: piece_est[k][0])
    target, target_half = piece_est[target_key]

    exceedance = {}
    for frac in eps_fractions:
        eps = frac * abs(target)
        hits = []
        for gi in range(len(ns)):
            dev = np.abs(np.where(zero[gi], -np.inf, stat[gi]) - target)
            hits.append(int((dev > eps).sum()))
        rep = decay_report_from_proportions(
            f"exceed[eps={frac:g}*target]", ns, hits, replicas, conf=conf
        )
        rep.meta["epsilon"] = eps
        exceedance[f"{frac:g}"] = rep

    final_vals = stat[-1][~zero[-1]]
    band = float((np.quantile(final_vals, 0.75) - np.quantile(final_vals, 0.25)) / 2)
    report = TraceGrowthReport(
        label=f"trace[{variety.label}]",
        ns=ns,
        quantiles={k: tuple(v) for k, v in quantiles.items()},
        zero_trace=tuple(zero_counts),
        replicas=replicas,
        target=target,
        target_half_width=target_half,
        median_band=band,
        exceedance=exceedance,
        piece_estimates=piece_est,
        meta={
            "measure": measure.label,
            "distinguished_piece": target_key,
            "twist": variety.twist,
            "seed": seed,
        },
    )
    return report


# -- separation ---------------------------------------------------------------------------


@dataclass
class SeparationReport:
    estimates: List[Tuple[str, float, float]]  # (label, value, half), sorted desc
    verdict: str
    meta: Dict[str, object] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "estimates": [
                {"piece": k, "value": float(v), "half_width": float(h)}
                for k, v, h in self.estimates
            ],
            "meta": {k: self.meta[k] for k in sorted(self.meta)},
        }


def lyapunov_separation(
    measure: MeasureSpec,
    pieces: Sequence[Representation],
    n: int,
    replicas: int,
    seed: int,
    threads: int = 1,
    conf: float = 0.95,
) -> SeparationReport:
    """Per-piece top Lyapunov estimates on shared walks; SEPARATED when the
    top piece's CI lower bound clears every other CI upper bound."""
    if len(pieces) < 2:
        raise ValueError("separation needs at least two pieces")
    plugins = [TopLogPlugin(f"p{i}", rep, "left") for i, rep in enumerate(pieces)]
    ds = run_replicas(measure, [n], replicas, plugins, seed, threads)
    ests = []
    for i, rep in enumerate(pieces):
        vals = ds.column(plugins[i].name, "log_s1")[-1] / n
        m, h = mean_ci(vals, conf)
        ests.append((rep.label, m, h))
    ests.sort(key=lambda t: -t[1])
    top = ests[0]
    separated = all(top[1] - top[2] > v + h for _, v, h in ests[1:])
    return SeparationReport(
        ests,
        "SEPARATED" if separated else "TIED",
        meta={"measure": measure.label, "n": n, "replicas": replicas, "seed": seed},
    )


# -- free-group machinery -------------------------------------------------------------------


def count_reduced_words(max_len: int) -> int:
    return 1 + sum(4 * 3 ** (k - 1) for k in range(1, max_len + 1))


def _batch_adjugate(dirs: np.ndarray) -> np.ndarray:
    d = dirs.shape[-1]
    if d == 2:
        out = np.empty_like(dirs)
        out[:, 0, 0] = dirs[:, 1, 1]
        out[:, 0, 1] = -dirs[:, 0, 1]
        out[:, 1, 0] = -dirs[:, 1, 0]
        out[:, 1, 1] = dirs[:, 0, 0]
        return out
    if d == 3:
        out = np.empty_like(dirs)
        for i in range(3):
            for j in range(3):
                r = [k for k in range(3) if k != j]
                c = [k for k in range(3) if k != i]
                out[:, i, j] = ((-1) ** (i + j)) * (
                    dirs[:, r[0], c[0]] * dirs[:, r[1], c[1]]
                    - dirs[:, r[0], c[1]] * dirs[:, r[1], c[0]]
                )
        return out
    raise DimensionMismatch("adjugate helper supports d = 2, 3")


def _inverse_renorm(dirs: np.ndarray, logs: np.ndarray):
    """(dirs, logs) of the inverse of a unit-determinant renormalized
    product: inv(true) = adj(true) = e^{(d-1) logs} adj(dirs)."""
    d = dirs.shape[-1]
    adj = _batch_adjugate(dirs)
    nrm = np.sqrt(np.einsum("rij,rij->r", adj, adj))
    return adj / nrm[:, None, None], (d - 1) * logs + np.log(nrm)


class SnapshotPlugin(Plugin):
    """Raw chain state snapshots for paired-walk postprocessing."""

    fields = ("dir", "log")

    def __init__(self, name: str, exact: bool):
        self.name = name
        self._exact = exact
        if exact:
            self.fields = ("dir", "log", "num", "den")

    def requirements(self):
        return Requirements(exact=self._exact)

    def extract(self, ctx):
        dirs, logs = ctx.chain("src")
        out = {"dir": dirs.copy(), "log": logs.copy()}
        if self._exact:
            nums, dens = ctx.exact_products()
            out["num"] = nums.copy()
            out["den"] = dens.copy()
        return out


def _word_scan(
    gens_dirs, gens_logs, max_len, *, collect_span=False, identity_tol=1e-4
):
    """DFS over reduced words evaluating renormalized products per pair.

    gens_dirs/logs: lists of 4 arrays ((R,d,d), (R,)) for a, a^-1, b, b^-1.
    Returns (relation_mask, span_dirs, span_logs, word_count) where
    relation_mask flags pairs where some nontrivial word is the identity
    within the float screen.
    """
    R, d, _ = gens_dirs[0].shape
    ident = np.eye(d) / math.sqrt(d)
    log_ident = 0.5 * math.log(d)
    relation = np.zeros(R, dtype=bool)
    hits: Dict[int, List[Tuple[int, ...]]] = {}
    span_dirs = [np.tile(ident, (R, 1, 1))]
    span_logs = [np.full(R, log_ident)]
    count = 0
    max_words_per_pair = 8

    def visit(word, dirs, logs):
        nonlocal count
        count += 1
        if word:
            dev = np.sqrt(np.einsum("rij,rij->r", dirs - ident, dirs - ident))
            close = (dev <= identity_tol) & (np.abs(logs - log_ident) <= 0.1)
            if np.any(close):
                for r in np.nonzero(close)[0]:
                    lst = hits.setdefault(int(r), [])
                    if len(lst) < max_words_per_pair:
                        lst.append(word)
                relation[close] = True
            if collect_span:
                span_dirs.append(dirs)
                span_logs.append(logs)
        if len(word) == max_len:
            return
        last = word[-1] if word else -1
        for letter in range(4):
            if last >= 0 and (letter ^ 1) == last:
                continue
            nd = dirs @ gens_dirs[letter]
            nrm = np.sqrt(np.einsum("rij,rij->r", nd, nd))
            visit(word + (letter,), nd / nrm[:, None, None], logs + gens_logs[letter] + np.log(nrm))

    visit((), np.tile(np.eye(d), (R, 1, 1)), np.zeros(R))
    return relation, hits, span_dirs, span_logs, count


def _confirm_exact_relation(hits, nums1, dens1, nums2, dens2):
    """Exact check of screened identity words; returns per-replica flags."""
    from .matkit import ExactMatrix

    confirmed = {}
    for r, words in hits.items():
        m1 = ExactMatrix(tuple(tuple(int(v) for v in row) for row in nums1[r]), int(dens1[r]))
        m2 = ExactMatrix(tuple(tuple(int(v) for v in row) for row in nums2[r]), int(dens2[r]))
        gens = [m1, exact_inverse(m1), m2, exact_inverse(m2)]
        ok = False
        for word in words:
            prod = None
            for letter in word:
                prod = gens[letter] if prod is None else prod.matmul(gens[letter])
            prod = prod.reduced()
            d = prod.dim
            if all(
                prod.num[i][j] == (prod.den if i == j else 0)
                for i in range(d)
                for j in range(d)
            ):
                ok = True
                break
        confirmed[r] = ok
    return confirmed


def freeness_experiment(
    m1: MeasureSpec,
    m2: MeasureSpec,
    n_grid: Sequence[int],
    replicas: int,
    max_word_len: int = 6,
    seed: int = 0,
    threads: int = 1,
    conf: float = 0.95,
) -> DecayReport:
    """Fraction of independent pairs (S_{1,n}, S_{2,n}) admitting a
    nontrivial reduced relation of length <= max_word_len; float screening
    with exact big-integer confirmation when the measures are exact."""
    if count_reduced_words(max_word_len) > 1_000_000:
        raise WordBudgetExceeded("reduced-word enumeration exceeds 10^6 words")
    exact = m1.exact and m2.exact
    p1 = SnapshotPlugin("w1", exact)
    p2 = SnapshotPlugin("w2", exact)
    ds1 = run_replicas(m1, n_grid, replicas, [p1], seed, threads, channel=0)
    ds2 = run_replicas(m2, n_grid, replicas, [p2], seed, threads, channel=1)
    ns = ds1.n_grid
    hits_per_n = []
    for gi in range(len(ns)):
        d1, l1 = ds1.column("w1", "dir")[gi], ds1.column("w1", "log")[gi]
        d2, l2 = ds2.column("w2", "dir")[gi], ds2.column("w2", "log")[gi]
        i1d, i1l = _inverse_renorm(d1, l1)
        i2d, i2l = _inverse_renorm(d2, l2)
        relation, hits, _, _, _ = _word_scan(
            [d1, i1d, d2, i2d], [l1, i1l, l2, i2l], max_word_len
        )
        if exact and hits:
            confirmed = _confirm_exact_relation(
                hits,
                ds1.column("w1", "num")[gi], ds1.column("w1", "den")[gi],
                ds2.column("w2", "num")[gi], ds2.column("w2", "den")[gi],
            )
            relation = np.zeros_like(relation)
            for r, ok in confirmed.items():
                if ok:
                    relation[r] = True
        hits_per_n.append(int(relation.sum()))
    report = decay_report_from_proportions(
        f"relations[len<={max_word_len}]", ns, hits_per_n, replicas, conf=conf
    )
    report.meta.update(
        {"m1": m1.label, "m2": m2.label, "seed": seed, "exact_confirmation": exact}
    )
    return report


def word_identity_scan(g1: SquareMatrix, g2: SquareMatrix, max_len: int) -> int:
    """Exact count of nontrivial reduced words w with w(g1, g2) = identity,
    over all reduced words of length <= max_len (deterministic pair test)."""
    if g1.exact is None or g2.exact is None:
        raise ValueError("exact pair scan needs exact matrices")
    gens = [g1.exact, exact_inverse(g1.exact), g2.exact, exact_inverse(g2.exact)]
    d = g1.dim
    count = 0

    def is_ident(m):
        m = m.reduced()
        return all(
            m.num[i][j] == (m.den if i == j else 0) for i in range(d) for j in range(d)
        )

    def visit(prod, last, depth):
        nonlocal count
        if depth == max_len:
            return
        for letter in range(4):
            if last >= 0 and (letter ^ 1) == last:
                continue
            np_ = gens[letter] if prod is None else prod.matmul(gens[letter])
            if is_ident(np_):
                count += 1
            visit(np_, letter, depth + 1)

    visit(None, -1, 0)
    return count


# -- Zariski witness --------------------------------------------------------------------


def zariski_witness(
    g1, g2, max_word_len: int = 4, rank_cutoff: float = 1e-8
) -> str:
    """Sufficient spanning certificate for Zariski density of <g1, g2>.

    WITNESSED requires (a) the word images to span the full d^2-dimensional
    endomorphism space (full matrix algebra, hence absolute irreducibility),
    (b) some word with top singular value above 1 (non-compactness), and for
    d = 2 additionally (c) some word with |trace| > 2.  NOT_WITNESSED is
    inconclusive.
    """
    a1 = as_array(g1)
    a2 = as_array(g2)
    if a1.shape != a2.shape:
        raise DimensionMismatch("pair dimensions disagree")
    stats = _witness_batch(
        a1[None].copy(), np.zeros(1), a2[None].copy(), np.zeros(1),
        max_word_len, rank_cutoff,
    )
    return "WITNESSED" if stats[0] else "NOT_WITNESSED"


def _witness_batch(d1, l1, d2, l2, max_word_len, rank_cutoff=1e-8):
    """Vectorized witness over pairs given renormalized (dirs, logs).

    Accepts raw matrices when logs are zero; normalizes internally.
    """
    nrm1 = np.sqrt(np.einsum("rij,rij->r", d1, d1))
    nrm2 = np.sqrt(np.einsum("rij,rij->r", d2, d2))
    d1 = d1 / nrm1[:, None, None]
    l1 = l1 + np.log(nrm1)
    d2 = d2 / nrm2[:, None, None]
    l2 = l2 + np.log(nrm2)
    i1d, i1l = _inverse_renorm(d1, l1)
    i2d, i2l = _inverse_renorm(d2, l2)
    _, _, span_dirs, span_logs, _ = _word_scan(
        [d1, i1d, d2, i2d], [l1, i1l, l2, i2l], max_word_len, collect_span=True
    )
    R = d1.shape[0]
    dd = d1.shape[-1]
    stack = np.stack(span_dirs, axis=1)  # (R, W, d, d)
    logs = np.stack(span_logs, axis=1)  # (R, W)
    flat = stack.reshape(R, stack.shape[1], dd * dd)
    sv = np.linalg.svd(flat, compute_uv=False)
    full_rank = (sv > rank_cutoff * sv[:, :1]).sum(axis=1) >= dd * dd

    top_sv = np.linalg.svd(stack.reshape(-1, dd, dd), compute_uv=False)[:, 0]
    log_top = logs + np.log(top_sv).reshape(R, -1)
    noncompact = (log_top > math.log(1 + 1e-6)).any(axis=1)

    witnessed = full_rank & noncompact
    if dd == 2:
        tr = np.trace(stack, axis1=2, axis2=3)
        safe = np.where(np.abs(tr) < 1e-300, 1e-300, np.abs(tr))
        log_tr = logs + np.log(safe)
        big_trace = (log_tr > math.log(2 + 1e-9)).any(axis=1)
        witnessed &= big_trace
    return witnessed


@dataclass
class GenericityReport:
    witness_failure: DecayReport
    relations: DecayReport

    def summary(self) -> dict:
        return {
            "witness_failure": self.witness_failure.summary(),
            "relations": self.relations.summary(),
        }


def genericity_experiment(
    m1: MeasureSpec,
    m2: MeasureSpec,
    n_grid: Sequence[int],
    replicas: int,
    seed: int,
    relation_word_len: int = 6,
    witness_word_len: int = 4,
    threads: int = 1,
    conf: float = 0.95,
) -> GenericityReport:
    """Paired decay report: fraction of pairs failing the Zariski witness
    and fraction admitting a short relation, per n."""
    relations = freeness_experiment(
        m1, m2, n_grid, replicas, relation_word_len, seed, threads, conf
    )
    p1 = SnapshotPlugin("w1", False)
    p2 = SnapshotPlugin("w2", False)
    ds1 = run_replicas(m1, n_grid, replicas, [p1], seed, threads, channel=0)
    ds2 = run_replicas(m2, n_grid, replicas, [p2], seed, threads, channel=1)
    ns = ds1.n_grid
    fails = []
    for gi in range(len(ns)):
        witnessed = _witness_batch(
            ds1.column("w1", "dir")[gi],
            ds1.column("w1", "log")[gi],
            ds2.column("w2", "dir")[gi],
            ds2.column("w2", "log")[gi],
            witness_word_len,
        )
        fails.append(int((~witnessed).sum()))
    wf = decay_report_from_proportions(
        f"witness_failure[len<={witness_word_len}]", ns, fails, replicas, conf=conf
    )
    wf.meta.update({"m1": m1.label, "m2": m2.label, "seed": seed})
    return GenericityReport(wf, relations)
