"""Small dense linear algebra for random matrix products.

KAK (Cartan) decomposition via the SVD, Cartan and Jordan projections,
the projective (Fubini-Study) metric, exterior powers, and overflow-safe
renormalized product accumulation.  Matrices are small (dimension up to a
few dozen) and dense; everything is plain float64 numpy with an optional
exact rational mirror for integer-valued group elements.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    BadExponent,
    DimensionMismatch,
    EigenFailure,
    Overflow,
    SingularInput,
)

# Frobenius norms outside this range abort a renormalization step.
_NORM_FLOOR = 1e-150
_NORM_CEIL = 1e150

# Determinant tolerance (relative to scale**dim) for group elements.
_DET_RTOL = 1e-9


class ExactMatrix(NamedTuple):
    """Rational matrix stored as integer numerators over one denominator."""

    num: tuple  # tuple of tuples of python ints
    den: int

    @property
    def dim(self):
        return len(self.num)

    def to_float(self) -> np.ndarray:
        return np.array(self.num, dtype=float) / float(self.den)

    def to_fractions(self):
        return tuple(tuple(Fraction(v, self.den) for v in row) for row in self.num)

    def matmul(self, other: "ExactMatrix") -> "ExactMatrix":
        d = self.dim
        a, b = self.num, other.num
        rows = tuple(
            tuple(sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d))
            for i in range(d)
        )
        return ExactMatrix(rows, self.den * other.den).reduced()

    def reduced(self) -> "ExactMatrix":
        g = self.den
        for row in self.num:
            for v in row:
                g = math.gcd(g, v)
                if g == 1:
                    return self
        if g <= 1:
            return self
        return ExactMatrix(
            tuple(tuple(v // g for v in row) for row in self.num), self.den // g
        )


def exact_from_rows(rows) -> ExactMatrix:
    """Build an ExactMatrix from nested ints / Fractions / exact floats."""
    fr = [[Fraction(v) for v in row] for row in rows]
    den = 1
    for row in fr:
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
    num = tuple(tuple(int(v * den) for v in row) for row in fr)
    return ExactMatrix(num, den)


def exact_det(m: ExactMatrix) -> Fraction:
    """Exact determinant by fraction-free Gaussian elimination (Bareiss)."""
    d = m.dim
    a = [list(row) for row in m.num]
    sign = 1
    prev = 1
    for k in range(d - 1):
        if a[k][k] == 0:
            for i in range(k + 1, d):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, d):
            for j in range(k + 1, d):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return Fraction(sign * a[d - 1][d - 1], m.den**d)


def exact_minor(num, rows, cols) -> int:
    """Determinant of an integer submatrix selected by row/col index tuples."""
    k = len(rows)
    if k == 1:
        return num[rows[0]][cols[0]]
    if k == 2:
        (r0, r1), (c0, c1) = rows, cols
        return num[r0][c0] * num[r1][c1] - num[r0][c1] * num[r1][c0]
    total = 0
    r0 = rows[0]
    rest = rows[1:]
    for pos, c in enumerate(cols):
        sub = cols[:pos] + cols[pos + 1 :]
        term = num[r0][c] * exact_minor(num, rest, sub)
        total += term if pos % 2 == 0 else -term
    return total


def exact_adjugate(m: ExactMatrix) -> ExactMatrix:
    """Adjugate; equals the inverse times det.  For SL matrices (det=1 after
    denominator scaling) this is the workhorse behind exact inversion."""
    d = m.dim
    idx = tuple(range(d))
    num = []
    for i in range(d):
        row = []
        for j in range(d):
            rows = tuple(r for r in idx if r != j)
            cols = tuple(c for c in idx if c != i)
            sign = -1 if (i + j) % 2 else 1
            row.append(sign * exact_minor(m.num, rows, cols))
        num.append(tuple(row))
    # adj(M/den) = adj(M)/den^(d-1)
    return ExactMatrix(tuple(num), m.den ** (d - 1)).reduced()


def exact_inverse(m: ExactMatrix) -> ExactMatrix:
    det = exact_det(m)
    if det == 0:
        raise SingularInput("exact matrix is singular")
    adj = exact_adjugate(m)
    # (M)^-1 = adj / det
    num = adj.num
    den = adj.den
    scale = Fraction(1) / det
    p, q = scale.numerator, scale.denominator
    if p < 0:
        p, num = -p, tuple(tuple(-v for v in row) for row in num)
    num = tuple(tuple(v * p for v in row) for row in num)
    return ExactMatrix(num, den * q).reduced()


@dataclass(frozen=True)
class SquareMatrix:
    """Dense real square matrix, optionally mirrored by exact rationals.

    The exact mirror is present whenever the matrix was constructed from
    integer or rational data; it makes variety membership and word-identity
    tests exact.
    """

    entries: np.ndarray
    exact: Optional[ExactMatrix] = None

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatch(f"expected square matrix, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise DimensionMismatch("dim must be >= 2")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        if self.exact is not None and self.exact.to_float().shape != arr.shape:
            raise DimensionMismatch("exact mirror shape disagrees with entries")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def check_unimodular(self, rtol: float = _DET_RTOL) -> bool:
        if self.exact is not None:
            return exact_det(self.exact) == 1
        scale = max(np.max(np.abs(self.entries)), 1.0)
        return abs(self.det() - 1.0) <= rtol * scale**self.dim

    def inverse(self) -> "SquareMatrix":
        ex = exact_inverse(self.exact) if self.exact is not None else None
        return SquareMatrix(np.linalg.inv(self.entries), ex)

    def __matmul__(self, other: "SquareMatrix") -> "SquareMatrix":
        if self.dim != other.dim:
            raise DimensionMismatch("matrix dimensions disagree")
        ex = None
        if self.exact is not None and other.exact is not None:
            ex = self.exact.matmul(other.exact)
        return SquareMatrix(self.entries @ other.entries, ex)

    @classmethod
    def from_rows(cls, rows) -> "SquareMatrix":
        """Construct from nested numbers; keeps an exact mirror when every
        entry is an int, a Fraction, or a float representing a dyadic
        rational exactly."""
        try:
            ex = exact_from_rows(rows)
        except (TypeError, ValueError):
            ex = None
        arr = np.array([[float(v) for v in row] for row in rows], dtype=float)
        if ex is not None and not np.array_equal(ex.to_float(), arr):
            ex = None
        return cls(arr, ex)

    @classmethod
    def identity(cls, dim: int) -> "SquareMatrix":
        num = tuple(tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim))
        return cls(np.eye(dim), ExactMatrix(num, 1))

    @classmethod
    def elementary(cls, dim: int, i: int, j: int, value: int = 1) -> "SquareMatrix":
        """I + value * E_ij  (i != j), a unipotent elementary matrix."""
        if i == j:
            raise BadExponent("elementary matrix requires i != j")
        rows = [[1 if r == c else 0 for c in range(dim)] for r in range(dim)]
        rows[i][j] = value
        return cls.from_rows(rows)

    def as_text(self) -> str:
        lines = [str(self.dim)]
        for row in self.entries:
            lines.append(" ".join(format(v, ".17g") for v in row))
        return "\n".join(lines) + "\n"

    def as_json(self) -> str:
        return json.dumps([[v for v in row] for row in self.entries.tolist()])


MatrixLike = Union[SquareMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_array(g: MatrixLike) -> np.ndarray:
    if isinstance(g, SquareMatrix):
        return g.entries
    arr = np.asarray(g, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got shape {arr.shape}")
    return arr


def parse_matrix_text(text: str) -> SquareMatrix:
    """Plain text literal: dimension on the first line, then rows."""
    tokens = text.split()
    if not tokens:
        raise DimensionMismatch("empty matrix literal")
    dim = int(tokens[0])
    vals = tokens[1:]
    if len(vals) != dim * dim:
        raise DimensionMismatch(f"expected {dim * dim} entries, got {len(vals)}")

    def coerce(s):
        try:
            return int(s)
        except ValueError:
            pass
        try:
            return Fraction(s)
        except ValueError:
            return float(s)

    rows = [[coerce(vals[r * dim + c]) for c in range(dim)] for r in range(dim)]
    return SquareMatrix.from_rows(rows)


def parse_matrix_json(text: str) -> SquareMatrix:
    """JSON array-of-rows literal."""
    return SquareMatrix.from_rows(json.loads(text))


# -- Cartan / Jordan projections ----------------------------------------------


@dataclass(frozen=True)
class CartanTriple:
    """g = k_left @ diag(a) @ u_right with orthogonal factors and a positive
    non-increasing; the deterministic measurable section of KAK."""

    k_left: np.ndarray
    a: np.ndarray
    u_right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.k_left @ np.diag(self.a) @ self.u_right


@dataclass(frozen=True)
class CartanVector:
    """Sorted log singular values (Cartan projection) or log eigenvalue
    moduli (Jordan projection); lives in the closed Weyl chamber."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    def simple_root_gaps(self) -> np.ndarray:
        return self.coords[:-1] - self.coords[1:]


def _canonical_svd(arr: np.ndarray):
    """SVD with a fixed sign convention: in each left-singular column the
    entry of largest magnitude is positive, compensating flips pushed into
    the right factor.  Makes g -> (K, A, U) a deterministic section."""
    u, s, vt = np.linalg.svd(arr)
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivot, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    u = u * signs
    vt = vt * signs[:, None]
    return u, s, vt


def svd_cartan(g: MatrixLike) -> CartanTriple:
    """KAK decomposition of an invertible matrix through the SVD."""
    arr = as_array(g)
    u, s, vt = _canonical_svd(arr)
    if s[-1] < 1e-300:
        raise SingularInput(f"smallest singular value {s[-1]:.3e} underflows")
    return CartanTriple(u, s, vt)


def cartan_projection(g: MatrixLike) -> CartanVector:
    """Vector of log singular values, non-increasing."""
    arr = as_array(g)
    s = np.linalg.svd(arr, compute_uv=False)
    if s[-1] < 1e-300:
        raise SingularInput(f"smallest singular value {s[-1]:.3e} underflows")
    return CartanVector(np.log(s))


def jordan_projection(g: MatrixLike) -> CartanVector:
    """Vector of log eigenvalue moduli, non-increasing."""
    arr = as_array(g)
    try:
        eig = np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    mods = np.abs(eig)
    if np.min(mods) <= 0.0:
        raise SingularInput("zero eigenvalue modulus")
    return CartanVector(np.sort(np.log(mods))[::-1])


# -- projective space ----------------------------------------------------------


@dataclass(frozen=True)
class ProjPoint:
    """Unit vector modulo sign; the first significantly nonzero coordinate
    is made positive so equal projective points compare equal."""

    rep_vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.rep_vector, dtype=float)
        n = np.linalg.norm(v)
        if n == 0.0:
            raise ZeroDivisionError("cannot projectivize the zero vector")
        v = v / n
        nz = np.nonzero(np.abs(v) > 1e-13)[0]
        lead = nz[0] if nz.size else int(np.argmax(np.abs(v)))
        if v[lead] < 0:
            v = -v
        v.setflags(write=False)
        object.__setattr__(self, "rep_vector", v)

    @property
    def dim(self) -> int:
        return self.rep_vector.shape[0]


def fubini_study(x: Union[ProjPoint, np.ndarray], y: Union[ProjPoint, np.ndarray]) -> float:
    """delta([x],[y]) = |x ^ y| / (|x||y|), the sine of the angle between lines."""
    xv = x.rep_vector if isinstance(x, ProjPoint) else np.asarray(x, dtype=float)
    yv = y.rep_vector if isinstance(y, ProjPoint) else np.asarray(y, dtype=float)
    if xv.shape != yv.shape:
        raise DimensionMismatch("projective points have different dimensions")
    xv = xv / np.linalg.norm(xv)
    yv = yv / np.linalg.norm(yv)
    wedge = np.outer(xv, yv) - np.outer(yv, xv)
    return min(1.0, np.linalg.norm(wedge) / math.sqrt(2.0))


# -- exterior powers -----------------------------------------------------------


def wedge_basis(dim: int, k: int):
    """Lexicographic k-subsets of range(dim): the basis of the k-th wedge."""
    return list(itertools.combinations(range(dim), k))


def wedge_power_matrix(g: MatrixLike, k: int) -> SquareMatrix:
    """Matrix of the k-th exterior power on the lexicographic wedge basis.

    Entries are k x k minors of g (rows pick the output index, columns the
    input index); Cauchy-Binet makes this a homomorphism.
    """
    sm = g if isinstance(g, SquareMatrix) else SquareMatrix.from_rows(as_array(g))
    d = sm.dim
    if not 1 <= k <= d:
        raise BadExponent(f"wedge power k={k} outside 1..{d}")
    subsets = wedge_basis(d, k)
    m = len(subsets)
    arr = sm.entries
    out = np.empty((m, m))
    for r, rows in enumerate(subsets):
        sub = arr[np.ix_(rows, range(d))]
        for c, cols in enumerate(subsets):
            out[r, c] = np.linalg.det(sub[:, cols])
    ex = None
    if sm.exact is not None:
        num = tuple(
            tuple(exact_minor(sm.exact.num, rows, cols) for cols in subsets)
            for rows in subsets
        )
        ex = ExactMatrix(num, sm.exact.den**k).reduced()
        out = ex.to_float()
    return SquareMatrix(out, ex)


# -- renormalized products -----------------------------------------------------


@dataclass(frozen=True)
class RenormProduct:
    """Accumulated product in the form exp(log_scale) * direction.

    The direction has unit Frobenius norm after the first step, so products
    of millions of factors neither overflow nor underflow.
    """

    direction: np.ndarray
    log_scale: float

    @property
    def dim(self) -> int:
        return self.direction.shape[0]

    @classmethod
    def seed_identity(cls, dim: int) -> "RenormProduct":
        return cls(np.eye(dim), 0.0)

    def top_log_singular_value(self) -> float:
        s1 = np.linalg.svd(self.direction, compute_uv=False)[0]
        return self.log_scale + math.log(s1)

    def value(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.direction


def renorm_step(p: RenormProduct, g: MatrixLike) -> RenormProduct:
    """Left-multiply by g and renormalize to unit Frobenius norm."""
    arr = as_array(g)
    if arr.shape[0] != p.dim:
        raise DimensionMismatch("factor dimension disagrees with product")
    gnorm = np.linalg.norm(arr)
    if not (_NORM_FLOOR < gnorm < _NORM_CEIL):
        raise Overflow(f"factor Frobenius norm {gnorm:.3e} outside safe range")
    raw = arr @ p.direction
    nrm = np.linalg.norm(raw)
    if not (_NORM_FLOOR < nrm < _NORM_CEIL):
        raise Overflow(f"step norm {nrm:.3e} outside safe range")
    return RenormProduct(raw / nrm, p.log_scale + math.log(nrm))


def random_unimodular(dim: int, rng: np.random.Generator) -> SquareMatrix:
    """Gaussian matrix normalized to determinant one: a cheap Zariski-dense
    sampler on SL_d.  Near-singular draws are resampled."""
    while True:
        z = rng.standard_normal((dim, dim))
        det = np.linalg.det(z)
        if abs(det) > 1e-8:
            break
    g = z / abs(det) ** (1.0 / dim)
    if np.linalg.det(g) < 0:
        g = g.copy()
        g[0] = -g[0]
    return SquareMatrix(g)
