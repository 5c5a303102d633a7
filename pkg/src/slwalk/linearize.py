"""Turn polynomial variety membership into linear conditions on
representation coefficients.

Two routes are kept deliberately independent: direct polynomial
evaluation (exact on integer matrices) and the linear condition
functional(rho(g) @ start_vector) = 0.  Tests cross-check them; the walk
experiments use whichever route fits (exact membership via the
polynomial, trace growth via the linear form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DimensionMismatch,
    RankUnstable,
    VanishesOnGroup,
    ZeroPolynomial,
    ZeroVector,
)
from .matkit import SquareMatrix, as_array, random_unimodular
from .polynomials import EntryPolynomial, Polynomial, parse_entry_polynomial
from .reps import Representation, example1_rep, example2_rep, orbit_sum_rep, sym_basis

_MEMBER_RTOL = 1e-9


@dataclass(frozen=True)
class OrbitCondition:
    """Membership through a vector orbit: g in V iff P(g x) = 0."""

    poly: Polynomial  # polynomial on R^d
    x: Tuple[Fraction, ...]

    @property
    def d(self) -> int:
        return self.poly.nvars


@dataclass(frozen=True)
class LinearizedVariety:
    """A representation, a distinguished vector and a hyperplane functional
    with membership <=> functional(rho(g~) start) = 0, g~ = g or g^{-1}."""

    rep: object  # Representation or LearnedTranslationRep
    start_vector: np.ndarray
    functional: np.ndarray
    twist: str = "none"  # "none" | "inverse"
    source_poly: Optional[EntryPolynomial] = None
    orbit: Optional[OrbitCondition] = None
    label: str = ""

    def __post_init__(self):
        sv = np.asarray(self.start_vector, dtype=float).copy()
        fv = np.asarray(self.functional, dtype=float).copy()
        sv.setflags(write=False)
        fv.setflags(write=False)
        object.__setattr__(self, "start_vector", sv)
        object.__setattr__(self, "functional", fv)

    @property
    def source_dim(self) -> int:
        return self.rep.source_dim

    @property
    def pieces_known(self) -> bool:
        return isinstance(self.rep, Representation)

    def linear_value(self, g) -> float:
        """Membership value through the linear route."""
        garr = as_array(g)
        if self.twist == "inverse":
            garr = np.linalg.inv(garr)
        img = (
            self.rep.apply_float(garr)
            if isinstance(self.rep, Representation)
            else self.rep.apply_float(garr)
        )
        return float(self.functional @ (img @ self.start_vector))


def membership(variety, g) -> Tuple[float, bool]:
    """Evaluate the membership value and decision at a group element.

    Exact mode (integer/rational matrix with an exact polynomial source):
    member iff the value is exactly zero.  Float mode compares against a
    condition-aware scale (sum of absolute monomial contributions).
    """
    if isinstance(variety, EntryPolynomial):
        return _membership_poly(variety, g)
    if isinstance(variety, LinearizedVariety):
        if variety.source_poly is not None:
            return _membership_poly(variety.source_poly, g)
        if variety.orbit is not None:
            return _membership_orbit(variety.orbit, g)
        val = variety.linear_value(g)
        return val, abs(val) <= _MEMBER_RTOL * _linear_scale(variety, g)
    raise TypeError(f"cannot test membership for {type(variety)!r}")


def _linear_scale(variety: LinearizedVariety, g) -> float:
    garr = as_array(g)
    if variety.twist == "inverse":
        garr = np.linalg.inv(garr)
    img = variety.rep.apply_float(garr)
    contrib = np.abs(variety.functional) @ (np.abs(img) @ np.abs(variety.start_vector))
    return float(contrib) + 1e-300


def _membership_poly(q: EntryPolynomial, g) -> Tuple[float, bool]:
    sm = g if isinstance(g, SquareMatrix) else None
    arr = as_array(g)
    if arr.shape[0] != q.d:
        raise DimensionMismatch(f"polynomial expects dim {q.d}, matrix has {arr.shape[0]}")
    if sm is not None and sm.exact is not None:
        num_flat = [v for row in sm.exact.num for v in row]
        val, _ = q.poly.evaluate_scaled_int(num_flat, sm.exact.den)
        exact_val = Fraction(val, sm.exact.den**q.poly.degree)
        return float(exact_val), val == 0
    val, scale = q.value_batch(arr)
    return float(val), bool(abs(val) <= _MEMBER_RTOL * (scale + 1e-300))


def _membership_orbit(orb: OrbitCondition, g) -> Tuple[float, bool]:
    sm = g if isinstance(g, SquareMatrix) else None
    arr = as_array(g)
    if arr.shape[0] != orb.d:
        raise DimensionMismatch("orbit condition dimension disagrees")
    if sm is not None and sm.exact is not None and all(
        Fraction(v).denominator >= 1 for v in orb.x
    ):
        gx = [
            sum(Fraction(sm.exact.num[i][j], sm.exact.den) * orb.x[j] for j in range(orb.d))
            for i in range(orb.d)
        ]
        val = orb.poly.evaluate_exact(gx)
        return float(val), val == 0
    gx = arr @ np.array([float(v) for v in orb.x])
    val, scale = orb.poly.evaluate_batch(gx)
    return float(val), bool(abs(val) <= _MEMBER_RTOL * (scale + 1e-300))


# -- analytic linearizations -------------------------------------------------------


def linearize_orbit_variety(poly: Polynomial, x: Sequence) -> LinearizedVariety:
    """Linearize {g : P(g x) = 0} on the inverse-action symmetric powers.

    P embeds as a vector in the sum of Sym^i for i = 0..deg(P); the
    functional evaluates at x.  The inverse twist records that the walk
    engine must feed inverse-order products, matching the dual action.
    """
    if poly.is_zero:
        raise ZeroPolynomial("orbit polynomial is identically zero")
    xs = tuple(Fraction(v) for v in x)
    if all(v == 0 for v in xs):
        raise ZeroVector("orbit base point must be nonzero")
    d = poly.nvars
    k = poly.degree
    rep = orbit_sum_rep(d, k)
    parts = poly.homogeneous_parts()
    start = []
    functional = []
    for i in range(k + 1):
        basis = sym_basis(d, i)
        part = parts.get(i)
        for alpha in basis:
            c = part.terms.get(alpha, Fraction(0)) if part is not None else Fraction(0)
            start.append(float(c))
            mono = Fraction(1)
            for xv, e in zip(xs, alpha):
                mono *= xv**e
            functional.append(float(mono))
    return LinearizedVariety(
        rep,
        np.array(start),
        np.array(functional),
        twist="inverse",
        orbit=OrbitCondition(poly, xs),
        label=f"orbit[{poly.to_text()}]",
    )


def v1_variety() -> LinearizedVariety:
    """First benchmark hypersurface on SL_3: a^2 - ae + 2ad - ab - bd = 0,
    linearized on the quadratic-forms action with start e1 - e4 and
    hyperplane x1 + x4 = 0."""
    q = parse_entry_polynomial("a^2 - a*e + 2 a*d - a*b - b*d", 3, "v1")
    start = np.array([1.0, 0.0, 0.0, -1.0, 0.0, 0.0])
    functional = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    return LinearizedVariety(
        example1_rep(), start, functional, "none", source_poly=q, label="v1"
    )


def v2_variety() -> LinearizedVariety:
    """Second benchmark hypersurface on SL_3: ae - bd + 2e = 0, linearized
    on wedge^2 + std with start e1^e2 + e2 and hyperplane x1 + 2 x5 = 0."""
    q = parse_entry_polynomial("a*e - b*d + 2 e", 3, "v2")
    start = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    functional = np.array([1.0, 0.0, 0.0, 0.0, 2.0, 0.0])
    return LinearizedVariety(
        example2_rep(), start, functional, "none", source_poly=q, label="v2"
    )


def preset_variety(name: str) -> LinearizedVariety:
    if name == "v1":
        return v1_variety()
    if name == "v2":
        return v2_variety()
    raise KeyError(f"unknown variety preset {name!r}")


def exact_linear_data(variety: LinearizedVariety, measure):
    """Integer rep images of the atoms plus integer start/functional for the
    exact escape oracle; denominators are dropped (the zero test is scale
    invariant).  Returns (atom_nums, start_ints, functional_ints) or None
    when the variety has no exact analytic linear form."""
    if not isinstance(variety.rep, Representation):
        return None
    atoms = measure.atoms if variety.twist == "none" else measure.inverse_atoms()
    atom_nums = []
    for a in atoms:
        img = variety.rep.apply(a)
        if img.exact is None:
            return None
        atom_nums.append(img.exact.num)
    start = _as_int_vector(variety.start_vector)
    functional = _as_int_vector(variety.functional)
    if start is None or functional is None:
        return None
    return atom_nums, start, functional


def _as_int_vector(v: np.ndarray):
    fr = [Fraction(float(x)) for x in v]  # floats are exactly dyadic rationals
    den = 1
    for f in fr:
        den = den * f.denominator // math.gcd(den, f.denominator)
    if den > 2**24:
        return None
    return [int(f * den) for f in fr]


# -- learned linearization ----------------------------------------------------------


class LearnedTranslationRep:
    """Right-translation action on the numerical span of {g_j . Q}.

    Functions are represented by their values on a fixed sample set; the
    span basis comes from a rank-revealing SVD of the translate evaluation
    matrix, and group images are least-squares fits on the sample values.
    """

    def __init__(self, q, sample_points, translates, combos, basis_values, label):
        self.q = q
        self.source_dim = q.d
        self.sample_points = sample_points  # (S, d, d)
        self.translates = translates  # (J, d, d)
        self.combos = combos  # (r, J) combinations defining the basis
        self.basis_values = basis_values  # (r, S) basis function values
        self.dim = combos.shape[0]
        self.label = label
        self.pieces = ()
        self._pinv = np.linalg.pinv(basis_values.T)  # (r, S) solver

    def _function_values(self, h: np.ndarray) -> np.ndarray:
        """Values of the translated basis (h . b_k)(x_s) = b_k(x_s h)."""
        pts = self.sample_points @ h  # (S, d, d)
        # b_k(y) = sum_j combos[k, j] Q(y g_j)
        vals = np.empty((self.dim, pts.shape[0]))
        for k in range(self.dim):
            acc = np.zeros(pts.shape[0])
            for j, c in enumerate(self.combos[k]):
                if c == 0.0:
                    continue
                v, _ = self.q.value_batch(pts @ self.translates[j])
                acc += c * v
            vals[k] = acc
        return vals

    def apply_float(self, h) -> np.ndarray:
        """Matrix of right translation by h on the span basis (columns are
        coefficient fits; residual is validated at construction time)."""
        translated = self._function_values(as_array(h))  # (r, S)
        return self._pinv @ translated.T

    def fit_residual(self, h) -> float:
        translated = self._function_values(as_array(h))
        coeffs = self._pinv @ translated.T  # (r, r)
        recon = self.basis_values.T @ coeffs  # (S, r)
        num = np.linalg.norm(recon - translated.T)
        return num / max(np.linalg.norm(translated), 1e-300)


def linearize_entry_polynomial(
    q: EntryPolynomial, samples: int = 0, seed: int = 0
) -> LinearizedVariety:
    """Numerically span the right translates of Q and return the learned
    linearization (start = coordinates of Q, functional = evaluation at the
    identity).  Raises VanishesOnGroup for polynomials that are identically
    zero on SL_d (e.g. det - 1) and RankUnstable when the singular-value
    plateau is not flat across two cutoff decades.
    """
    d = q.d
    deg = q.degree
    monomial_dim = math.comb(d * d + deg, deg)
    min_samples = 4 * monomial_dim
    if samples <= 0:
        samples = min_samples
    if samples < min_samples:
        raise ValueError(f"samples must be >= {min_samples} for degree {deg}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    pts = np.stack([random_unimodular(d, rng).entries for _ in range(samples)])

    qvals, qscale = q.value_batch(pts)
    if np.all(np.abs(qvals) <= 1e-12 * (qscale + 1e-300)):
        raise VanishesOnGroup(f"{q.label or 'polynomial'} vanishes on SL_{d}")

    n_translates = monomial_dim + 8
    translates = np.stack(
        [np.eye(d)] + [random_unimodular(d, rng).entries for _ in range(n_translates - 1)]
    )
    evals = np.empty((n_translates, samples))
    for j in range(n_translates):
        evals[j], _ = q.value_batch(pts @ translates[j])

    u, s, vt = np.linalg.svd(evals, full_matrices=False)
    ranks = {cut: int(np.sum(s > cut * s[0])) for cut in (1e-7, 1e-8, 1e-9)}
    if ranks[1e-7] != ranks[1e-9]:
        raise RankUnstable(
            f"translate span rank not flat across cutoffs: {ranks}"
        )
    r = ranks[1e-8]
    combos = u[:, :r].T  # (r, J): basis functions b_k = sum_j combos[k,j] g_j.Q
    basis_values = combos @ evals  # (r, S)

    rep = LearnedTranslationRep(q, pts, translates, combos, basis_values, f"learned[{q.label}]")

    # held-out residual check on fresh group elements
    for _ in range(3):
        h = random_unimodular(d, rng).entries
        if rep.fit_residual(h) > 1e-7:
            raise RankUnstable("learned action residual exceeds 1e-7 on held-out elements")

    # start = coordinates of Q itself; functional = evaluation at identity
    start = rep._pinv @ qvals
    q_at_translates = np.array([float(q.value_batch(t)[0]) for t in translates])
    functional = combos @ q_at_translates
    return LinearizedVariety(
        rep,
        start,
        functional,
        twist="none",
        source_poly=q,
        label=f"learned[{q.label or q.to_text()}]",
    )
