"""Rational representations of SL_d with weight bookkeeping.

Each representation stores, per irreducible piece, a matrix of symbolic
entry polynomials in an auxiliary matrix H derived from the group element
(H = g, g^T or g^{-1}).  Applying the representation evaluates those
polynomials, so the float path and the exact rational path share one
structure and the homomorphism property is inherited rather than
re-derived per constructor.

Weights are integer exponent vectors of the diagonal torus action; the
"good" (weight-orthonormal) norm is realized by a diagonal rescaling
``good_scale`` under which compact factors act orthogonally and the top
singular value of the image equals the highest weight of the Cartan
A-part.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    AmbiguousHighestWeight,
    BadExponent,
    DimensionMismatch,
    EmptyParts,
    SourceDimMismatch,
)
from .matkit import (
    ExactMatrix,
    SquareMatrix,
    as_array,
    exact_inverse,
    exact_minor,
    wedge_basis,
)
from .polynomials import Polynomial

# -- dominance order on torus characters ---------------------------------------


def root_coordinates(diff: Sequence[int], d: int) -> Optional[Tuple[int, ...]]:
    """Express a character difference against the simple roots e_i - e_{i+1}.

    Characters of the SL_d torus are exponent vectors modulo (1,...,1).
    Returns the (d-1)-tuple of root coefficients, or None when the
    difference is not in the root lattice (incomparable characters).
    """
    s = sum(diff)
    if s % d != 0:
        return None
    c = -s // d
    beta = [v + c for v in diff]
    coeffs = []
    acc = 0
    for i in range(d - 1):
        acc += beta[i]
        coeffs.append(acc)
    return tuple(coeffs)


def dominance_compare(w1, w2, d: int) -> Optional[int]:
    """+1 if w1 > w2, -1 if w1 < w2, 0 if equal as characters, None if
    incomparable."""
    coeffs = root_coordinates([a - b for a, b in zip(w1, w2)], d)
    if coeffs is None:
        return None
    if all(c == 0 for c in coeffs):
        return 0
    if all(c >= 0 for c in coeffs):
        return 1
    if all(c <= 0 for c in coeffs):
        return -1
    return None


# -- symbolic entry machinery ---------------------------------------------------


def _h_var(d: int, i: int, j: int) -> Polynomial:
    return Polynomial.variable(d * d, i * d + j)


def _symbolic_minor(d: int, rows, cols) -> Polynomial:
    if len(rows) == 1:
        return _h_var(d, rows[0], cols[0])
    total = Polynomial.zero(d * d)
    r0, rest = rows[0], rows[1:]
    for pos, c in enumerate(cols):
        sub = cols[:pos] + cols[pos + 1 :]
        term = _h_var(d, r0, c) * _symbolic_minor(d, rest, sub)
        total = total + (term if pos % 2 == 0 else -term)
    return total


def sym_basis(d: int, k: int) -> Tuple[Tuple[int, ...], ...]:
    """Degree-k monomial exponent vectors in graded-lex order (X1^k first)."""
    if k < 0:
        raise BadExponent("symmetric power needs k >= 0")

    def gen(remaining, slots):
        if slots == 1:
            yield (remaining,)
            return
        for lead in range(remaining, -1, -1):
            for rest in gen(remaining - lead, slots - 1):
                yield (lead,) + rest

    return tuple(gen(k, d))


def _sym_entry_polys(d: int, basis) -> Tuple[Tuple[Polynomial, ...], ...]:
    """Entry polynomials of the substitution action X_i -> sum_l H[i,l] X_l
    on the given monomial basis: column j holds the coefficients of the
    substituted j-th basis monomial."""
    nv = d * d
    index = {b: i for i, b in enumerate(basis)}
    cols = []
    for alpha in basis:
        # expansion: dict X-exponent -> Polynomial in H entries
        expansion = {tuple([0] * d): Polynomial.constant(nv, 1)}
        for i, e in enumerate(alpha):
            for _ in range(e):
                new = {}
                for xexp, hpoly in expansion.items():
                    for l in range(d):
                        nexp = list(xexp)
                        nexp[l] += 1
                        nexp = tuple(nexp)
                        contrib = hpoly * _h_var(d, i, l)
                        new[nexp] = new[nexp] + contrib if nexp in new else contrib
                expansion = new
        col = [expansion.get(b, Polynomial.zero(nv)) for b in basis]
        cols.append(col)
    dim = len(basis)
    return tuple(tuple(cols[j][i] for j in range(dim)) for i in range(dim))


@dataclass(frozen=True)
class Piece:
    """One irreducible block of a representation."""

    label: str
    start: int
    stop: int
    hmode: str  # "g" | "transpose" | "inverse"
    entry_polys: tuple  # dim x dim tuple of Polynomial in the d*d entries of H
    weights: Tuple[Tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return self.stop - self.start

    def highest_weight(self, d: int) -> Tuple[int, ...]:
        idx = _highest_weight_index(self.weights, d)
        return self.weights[idx]


def _highest_weight_index(weights, d: int) -> int:
    best = 0
    for i in range(1, len(weights)):
        cmp = dominance_compare(weights[i], weights[best], d)
        if cmp == 1:
            best = i
    for i, w in enumerate(weights):
        if i == best:
            continue
        if dominance_compare(weights[best], w, d) not in (0, 1):
            raise AmbiguousHighestWeight(
                "no weight dominates all others; use per-piece data"
            )
    return best


@dataclass(frozen=True)
class Representation:
    """A rational matrix representation of SL_d with recorded pieces."""

    source_dim: int
    dim: int
    label: str
    pieces: Tuple[Piece, ...]
    weight_table: Tuple[Tuple[int, ...], ...]
    good_scale: np.ndarray

    def __post_init__(self):
        gs = np.asarray(self.good_scale, dtype=float)
        gs.setflags(write=False)
        object.__setattr__(self, "good_scale", gs)

    # -- weight data -------------------------------------------------------

    @property
    def highest_weight_index(self) -> int:
        return _highest_weight_index(self.weight_table, self.source_dim)

    @property
    def proximal(self) -> bool:
        idx = self.highest_weight_index
        hw = self.weight_table[idx]
        mult = sum(
            1
            for w in self.weight_table
            if dominance_compare(w, hw, self.source_dim) == 0
        )
        return mult == 1

    # -- evaluation --------------------------------------------------------

    def _hmatrix_float(self, arr: np.ndarray, hmode: str) -> np.ndarray:
        if hmode == "g":
            return arr
        if hmode == "transpose":
            return arr.T
        if hmode == "inverse":
            return np.linalg.inv(arr)
        raise ValueError(f"unknown hmode {hmode!r}")

    def _hmatrix_exact(self, ex: ExactMatrix, hmode: str):
        if hmode == "g":
            return ex
        if hmode == "transpose":
            return ExactMatrix(tuple(zip(*ex.num)), ex.den)
        if hmode == "inverse":
            return exact_inverse(ex)
        raise ValueError(f"unknown hmode {hmode!r}")

    def apply(self, g) -> SquareMatrix:
        """Image of a group element; keeps an exact mirror when g has one."""
        sm = g if isinstance(g, SquareMatrix) else SquareMatrix.from_rows(as_array(g))
        if sm.dim != self.source_dim:
            raise DimensionMismatch(
                f"rep expects dim {self.source_dim}, got {sm.dim}"
            )
        out = np.zeros((self.dim, self.dim))
        exact_rows = None
        if sm.exact is not None:
            exact_rows = [[Fraction(0)] * self.dim for _ in range(self.dim)]
        for piece in self.pieces:
            h = self._hmatrix_float(sm.entries, piece.hmode)
            flat = h.reshape(-1)
            for i in range(piece.dim):
                for j in range(piece.dim):
                    poly = piece.entry_polys[i][j]
                    if poly.is_zero:
                        continue
                    val, _ = poly.evaluate_batch(flat)
                    out[piece.start + i, piece.start + j] = float(val)
            if exact_rows is not None:
                hx = self._hmatrix_exact(sm.exact, piece.hmode)
                fr = [v for row in hx.to_fractions() for v in row]
                for i in range(piece.dim):
                    for j in range(piece.dim):
                        poly = piece.entry_polys[i][j]
                        if not poly.is_zero:
                            exact_rows[piece.start + i][piece.start + j] = (
                                poly.evaluate_exact(fr)
                            )
        if exact_rows is not None:
            from .matkit import exact_from_rows

            ex = exact_from_rows(exact_rows)
            return SquareMatrix(ex.to_float(), ex)
        return SquareMatrix(out)

    def apply_float(self, arr: np.ndarray) -> np.ndarray:
        """Float-only image (no SquareMatrix wrapper)."""
        return self.apply(SquareMatrix(np.asarray(arr, dtype=float))).entries

    def apply_good(self, g) -> np.ndarray:
        """Image conjugated into the weight-orthonormal basis."""
        m = self.apply(g).entries
        c = self.good_scale
        return (c[:, None] * m) / c[None, :]

    def atom_images(self, atoms) -> list:
        return [self.apply(a) for a in atoms]

    def piece_slice(self, index: int) -> slice:
        p = self.pieces[index]
        return slice(p.start, p.stop)


def weight_data(rep: Representation):
    """(highest weight, proximal flag, per-weight simple-root margins).

    Margins list, for every non-highest weight, the coefficients of
    chi_rho - chi against the simple roots; raises AmbiguousHighestWeight
    for reducible representations without a dominating weight.
    """
    idx = rep.highest_weight_index
    hw = rep.weight_table[idx]
    margins = []
    for i, w in enumerate(rep.weight_table):
        if i == idx:
            continue
        coeffs = root_coordinates(
            [a - b for a, b in zip(hw, w)], rep.source_dim
        )
        margins.append(coeffs)
    return hw, rep.proximal, margins


# -- constructors ---------------------------------------------------------------


def _identity_polys(d: int, transpose: bool = False):
    nv = d * d
    return tuple(
        tuple(
            Polynomial.variable(nv, (j * d + i) if transpose else (i * d + j))
            for j in range(d)
        )
        for i in range(d)
    )


@lru_cache(maxsize=None)
def standard_rep(d: int) -> Representation:
    piece = Piece(
        "std", 0, d, "g", _identity_polys(d), tuple(_unit_weight(d, i) for i in range(d))
    )
    return Representation(
        d, d, "std", (piece,), piece.weights, np.ones(d)
    )


def _unit_weight(d: int, i: int) -> Tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(d))


@lru_cache(maxsize=None)
def dual_rep(d: int) -> Representation:
    # (g^{-1})^T: with H = g^{-1} the (i,j) entry is H[j,i]
    piece = Piece(
        "dual",
        0,
        d,
        "inverse",
        _identity_polys(d, transpose=True),
        tuple(tuple(-v for v in _unit_weight(d, i)) for i in range(d)),
    )
    return Representation(d, d, "dual", (piece,), piece.weights, np.ones(d))


@lru_cache(maxsize=None)
def wedge_rep(d: int, k: int) -> Representation:
    if not 1 <= k <= d:
        raise BadExponent(f"wedge power k={k} outside 1..{d}")
    subsets = wedge_basis(d, k)
    polys = tuple(
        tuple(_symbolic_minor(d, rows, cols) for cols in subsets) for rows in subsets
    )
    weights = tuple(
        tuple(1 if i in rows else 0 for i in range(d)) for rows in subsets
    )
    label = f"wedge:{k}"
    piece = Piece(label, 0, len(subsets), "g", polys, weights)
    return Representation(d, len(subsets), label, (piece,), weights, np.ones(len(subsets)))


def _sym_good_scale(basis, k: int) -> np.ndarray:
    # Bombieri normalization: |X^alpha|^2 = alpha!/k!, which makes rotations
    # act orthogonally on the rescaled coordinates.
    return np.array(
        [math.sqrt(_multi_factorial(alpha) / math.factorial(k)) for alpha in basis]
    )


def _multi_factorial(alpha) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


@lru_cache(maxsize=None)
def sym_power_rep(
    d: int, k: int, variant: str = "transpose", basis_order: Optional[tuple] = None
) -> Representation:
    """Symmetric power on degree-k monomials in graded-lex order.

    variant "transpose": g.P(X) = P(g^T X)  (the quadratic-forms action);
    variant "inverse":   g.P(X) = P(g^{-1} X)  (the dual/orbit action, with
    negated weights).
    """
    if d < 2:
        raise DimensionMismatch("source dimension must be >= 2")
    if k < 0:
        raise BadExponent("symmetric power needs k >= 0")
    if variant not in ("transpose", "inverse"):
        raise ValueError(f"unknown sym variant {variant!r}")
    basis = tuple(basis_order) if basis_order is not None else sym_basis(d, k)
    if sorted(basis) != sorted(sym_basis(d, k)):
        raise BadExponent("basis_order must permute the degree-k monomials")
    polys = _sym_entry_polys(d, basis)
    if variant == "transpose":
        hmode = "transpose"
        weights = tuple(basis)
    else:
        hmode = "inverse"
        weights = tuple(tuple(-v for v in alpha) for alpha in basis)
    tag = "t" if variant == "transpose" else "i"
    label = f"sym:{k}:{tag}"
    piece = Piece(label, 0, len(basis), hmode, polys, weights)
    return Representation(
        d, len(basis), label, (piece,), weights, _sym_good_scale(basis, k)
    )


_EX1_BASIS = ((2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1))


@lru_cache(maxsize=None)
def example1_rep() -> Representation:
    """SL_3 acting on quadratic forms in the basis {X^2,Y^2,Z^2,XY,XZ,YZ}."""
    rep = sym_power_rep(3, 2, "transpose", basis_order=_EX1_BASIS)
    piece = Piece("ex1", 0, 6, rep.pieces[0].hmode, rep.pieces[0].entry_polys, rep.pieces[0].weights)
    return Representation(3, 6, "ex1", (piece,), rep.weight_table, rep.good_scale)


@lru_cache(maxsize=None)
def example2_rep() -> Representation:
    """SL_3 on wedge^2(R^3) + R^3 in the basis (e1^e2, e1^e3, e2^e3, e1, e2, e3)."""
    return direct_sum_rep((wedge_rep(3, 2), standard_rep(3)), label="ex2")


def direct_sum_rep(parts: Sequence[Representation], label: str = "") -> Representation:
    if not parts:
        raise EmptyParts("direct sum needs at least one part")
    d = parts[0].source_dim
    if any(p.source_dim != d for p in parts):
        raise SourceDimMismatch("direct-sum parts have different source dimensions")
    if len(parts) == 1 and not label:
        return parts[0]
    pieces = []
    offset = 0
    weights = []
    scales = []
    for part in parts:
        for piece in part.pieces:
            pieces.append(
                Piece(
                    piece.label,
                    offset + piece.start,
                    offset + piece.stop,
                    piece.hmode,
                    piece.entry_polys,
                    piece.weights,
                )
            )
        offset += part.dim
        weights.extend(part.weight_table)
        scales.append(part.good_scale)
    label = label or "sum(" + ",".join(p.label for p in parts) + ")"
    return Representation(
        d,
        offset,
        label,
        tuple(pieces),
        tuple(weights),
        np.concatenate(scales),
    )


# -- descriptor strings ----------------------------------------------------------


def parse_rep_descriptor(text: str, d: int) -> Representation:
    """CLI descriptors: std, dual, wedge:k, sym:k:t, sym:k:i, ex1, ex2,
    sum(a,b,...)."""
    text = text.strip()
    if text == "std":
        return standard_rep(d)
    if text == "dual":
        return dual_rep(d)
    if text == "ex1":
        if d != 3:
            raise DimensionMismatch("ex1 is an SL_3 representation")
        return example1_rep()
    if text == "ex2":
        if d != 3:
            raise DimensionMismatch("ex2 is an SL_3 representation")
        return example2_rep()
    m = re.fullmatch(r"wedge:(\d+)", text)
    if m:
        return wedge_rep(d, int(m.group(1)))
    m = re.fullmatch(r"sym:(\d+):(t|i)", text)
    if m:
        variant = "transpose" if m.group(2) == "t" else "inverse"
        return sym_power_rep(d, int(m.group(1)), variant)
    m = re.fullmatch(r"sum\((.*)\)", text)
    if m:
        inner = m.group(1)
        parts = []
        depth = 0
        token = ""
        for ch in inner + ",":
            if ch == "," and depth == 0:
                if token.strip():
                    parts.append(parse_rep_descriptor(token, d))
                token = ""
                continue
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            token += ch
        return direct_sum_rep(parts)
    raise ValueError(f"unknown representation descriptor {text!r}")


def orbit_sum_rep(d: int, k: int) -> Representation:
    """The direct sum of inverse-variant symmetric powers of degree 0..k on
    which degree-k orbit conditions linearize."""
    return direct_sum_rep([sym_power_rep(d, i, "inverse") for i in range(k + 1)])
