"""Sparse polynomials with rational coefficients.

Two uses share this module: polynomials in the d*d matrix entries (variety
membership conditions, e.g. ``a^2 - a*e + 2 a*d - a*b - b*d`` on SL_3) and
polynomials on R^d (vector-orbit conditions).  Terms map exponent tuples to
``Fraction`` coefficients, so evaluation on integer matrices is exact.

Text format for entry polynomials: terms joined by ``+``/``-``, each an
optional rational coefficient followed by variable factors.  Variables are
the single letters ``a``, ``b``, ... read row-major (the d=3 naming
``a..i``), or ``e(i,j)`` with 1-based indices for general dimension.
Powers use ``^``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Tuple

import numpy as np

from .errors import PolynomialParseError, ZeroPolynomial

Exponents = Tuple[int, ...]


def _add_term(terms: Dict[Exponents, Fraction], exps: Exponents, coeff: Fraction):
    acc = terms.get(exps, Fraction(0)) + coeff
    if acc == 0:
        terms.pop(exps, None)
    else:
        terms[exps] = acc


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in ``nvars`` variables with rational coefficients."""

    nvars: int
    terms: Dict[Exponents, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for exps, c in self.terms.items():
            c = Fraction(c)
            if c == 0:
                continue
            if len(exps) != self.nvars:
                raise PolynomialParseError("exponent tuple length disagrees with nvars")
            clean[tuple(int(e) for e in exps)] = c
        object.__setattr__(self, "terms", clean)

    # -- construction ----------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars, {})

    @classmethod
    def constant(cls, nvars: int, value) -> "Polynomial":
        return cls(nvars, {tuple([0] * nvars): Fraction(value)})

    @classmethod
    def monomial(cls, nvars: int, exps: Exponents, coeff=1) -> "Polynomial":
        return cls(nvars, {tuple(exps): Fraction(coeff)})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Polynomial":
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): Fraction(1)})

    # -- basic queries -----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def homogeneous_parts(self) -> Dict[int, "Polynomial"]:
        parts: Dict[int, Dict[Exponents, Fraction]] = {}
        for exps, c in self.terms.items():
            parts.setdefault(sum(exps), {})[exps] = c
        return {k: Polynomial(self.nvars, v) for k, v in sorted(parts.items())}

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        terms = dict(self.terms)
        for exps, c in other.terms.items():
            _add_term(terms, exps, c)
        return Polynomial(self.nvars, terms)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            terms: Dict[Exponents, Fraction] = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    _add_term(terms, tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
            return Polynomial(self.nvars, terms)
        return Polynomial(
            self.nvars, {e: c * Fraction(other) for e, c in self.terms.items()}
        )

    __rmul__ = __mul__

    def __neg__(self) -> "Polynomial":
        return self * Fraction(-1)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def substitute_linear(self, coeff_rows) -> "Polynomial":
        """Substitute X_i -> sum_l coeff_rows[i][l] X_l (rows may be Fractions
        or ints); the workhorse of symmetric-power representation matrices."""
        rows = [[Fraction(v) for v in row] for row in coeff_rows]
        lin = [
            Polynomial(self.nvars, {
                tuple(1 if m == l else 0 for m in range(self.nvars)): rows[i][l]
                for l in range(self.nvars)
                if rows[i][l] != 0
            })
            for i in range(self.nvars)
        ]
        out = Polynomial.zero(self.nvars)
        for exps, c in self.terms.items():
            term = Polynomial.constant(self.nvars, c)
            for i, e in enumerate(exps):
                for _ in range(e):
                    term = term * lin[i]
            out = out + term
        return out

    # -- evaluation ----------------------------------------------------------

    def evaluate_exact(self, values) -> Fraction:
        """Exact evaluation at a vector of ints/Fractions."""
        vals = [Fraction(v) for v in values]
        total = Fraction(0)
        for exps, c in self.terms.items():
            term = c
            for v, e in zip(vals, exps):
                if e:
                    term *= v**e
            total += term
        return total

    def evaluate_scaled_int(self, num_values, den: int):
        """Evaluate at the rational vector num_values/den using integers only.

        Returns (V, k) with the exact value equal to V / den**k; in
        particular the value is zero iff V == 0.  num_values must be ints
        and every coefficient an integer (the common case for variety
        polynomials).
        """
        k = self.degree
        total = 0
        for exps, c in self.terms.items():
            if c.denominator != 1:
                raise PolynomialParseError("scaled-int evaluation needs integer coefficients")
            term = c.numerator * den ** (k - sum(exps))
            for v, e in zip(num_values, exps):
                if e:
                    term *= v**e
            total += term
        return total, k

    def evaluate_batch(self, values: np.ndarray):
        """Vectorized float evaluation.

        values has shape (..., nvars); returns (value, scale) arrays where
        scale is the sum of absolute monomial contributions, the yardstick
        for condition-aware zero tests.
        """
        values = np.asarray(values, dtype=float)
        val = np.zeros(values.shape[:-1])
        scale = np.zeros(values.shape[:-1])
        for exps, c in self.terms.items():
            term = np.full(values.shape[:-1], float(c))
            for i, e in enumerate(exps):
                if e:
                    term = term * values[..., i] ** e
            val += term
            scale += np.abs(term)
        return val, scale

    def __call__(self, values):
        v, _ = self.evaluate_batch(np.asarray(values, dtype=float))
        return float(v) if v.ndim == 0 else v

    # -- pretty printing -------------------------------------------------------

    def to_text(self, names=None) -> str:
        if not self.terms:
            return "0"
        if names is None:
            names = [f"x{i}" for i in range(self.nvars)]
        chunks = []
        for exps, c in sorted(self.terms.items(), key=lambda t: (-sum(t[0]), t[0])):
            factors = []
            for i, e in enumerate(exps):
                if e == 1:
                    factors.append(names[i])
                elif e > 1:
                    factors.append(f"{names[i]}^{e}")
            body = "*".join(factors)
            mag = abs(c)
            if not body:
                piece = str(mag)
            elif mag == 1:
                piece = body
            else:
                piece = f"{mag} {body}"
            chunks.append(("- " if c < 0 else "+ ") + piece)
        text = " ".join(chunks)
        return text[2:] if text.startswith("+ ") else text


# -- entry polynomials over SL_d -------------------------------------------------


@dataclass(frozen=True)
class EntryPolynomial:
    """Polynomial in the d*d entries of a matrix, read row-major."""

    d: int
    poly: Polynomial
    label: str = ""

    def __post_init__(self):
        if self.poly.nvars != self.d * self.d:
            raise PolynomialParseError("entry polynomial has wrong variable count")
        if self.poly.is_zero:
            raise ZeroPolynomial("entry polynomial is identically zero")

    @property
    def degree(self) -> int:
        return self.poly.degree

    def value_at(self, g) -> Fraction:
        """Exact value at a matrix with int/Fraction entries."""
        flat = [v for row in g for v in row]
        return self.poly.evaluate_exact(flat)

    def value_batch(self, mats: np.ndarray):
        """Float values and condition scales on a batch (..., d, d)."""
        mats = np.asarray(mats, dtype=float)
        flat = mats.reshape(*mats.shape[:-2], self.d * self.d)
        return self.poly.evaluate_batch(flat)

    def entry_names(self):
        if self.d * self.d <= 25:
            return [chr(ord("a") + i) for i in range(self.d * self.d)]
        return [f"e({i + 1},{j + 1})" for i in range(self.d) for j in range(self.d)]

    def to_text(self) -> str:
        return self.poly.to_text(self.entry_names())


_TOKEN = re.compile(
    r"\s*(?:(?P<sign>[+-])|(?P<num>\d+(?:/\d+)?)|(?P<entry>e\(\s*\d+\s*,\s*\d+\s*\))"
    r"|(?P<var>[a-z])|(?P<pow>\^\d+)|(?P<mul>\*))"
)


def parse_entry_polynomial(text: str, d: int, label: str = "") -> EntryPolynomial:
    """Parse the text format described in the module docstring."""
    nvars = d * d
    terms: Dict[Exponents, Fraction] = {}
    pos = 0
    sign = 1
    coeff = None
    exps = None

    def flush():
        nonlocal coeff, exps, sign
        if coeff is None and exps is None:
            return
        c = Fraction(1) if coeff is None else coeff
        e = tuple([0] * nvars) if exps is None else tuple(exps)
        _add_term(terms, e, sign * c)
        sign, coeff, exps = 1, None, None

    def bump(index: int, power: int):
        nonlocal exps
        if index >= nvars:
            raise PolynomialParseError(
                f"variable index {index} out of range for d={d}"
            )
        if exps is None:
            exps = [0] * nvars
        exps[index] += power

    last_index = None
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise PolynomialParseError(f"cannot parse polynomial near {text[pos:pos + 12]!r}")
        pos = m.end()
        if m.group("sign"):
            if coeff is not None or exps is not None:
                flush()
            sign = -sign if m.group("sign") == "-" else sign
            last_index = None
        elif m.group("num"):
            if coeff is not None or exps is not None:
                # juxtaposition like "2 a" already started; a second number is an error
                if exps is not None:
                    raise PolynomialParseError("coefficient after variables")
                raise PolynomialParseError("two coefficients in one term")
            coeff = Fraction(m.group("num"))
            last_index = None
        elif m.group("entry"):
            i, j = map(int, re.findall(r"\d+", m.group("entry")))
            if not (1 <= i <= d and 1 <= j <= d):
                raise PolynomialParseError(f"entry index ({i},{j}) out of range")
            last_index = (i - 1) * d + (j - 1)
            bump(last_index, 1)
        elif m.group("var"):
            last_index = ord(m.group("var")) - ord("a")
            bump(last_index, 1)
        elif m.group("pow"):
            if last_index is None:
                raise PolynomialParseError("power without a variable")
            bump(last_index, int(m.group("pow")[1:]) - 1)
            last_index = None
        # '*' tokens are separators; nothing to do
    flush()
    poly = Polynomial(nvars, terms)
    if poly.is_zero:
        raise ZeroPolynomial("entry polynomial is identically zero")
    return EntryPolynomial(d, poly, label or text.strip())


def entry_polynomial_from_json(data, label: str = "") -> EntryPolynomial:
    """JSON form: {"d": 3, "terms": [{"coeff": "2", "powers": {"a": 1, "d": 1}}, ...]}
    where powers keys are letters or "i,j" 1-based pairs."""
    d = int(data["d"])
    nvars = d * d
    terms: Dict[Exponents, Fraction] = {}
    for t in data["terms"]:
        exps = [0] * nvars
        for key, e in t.get("powers", {}).items():
            if "," in str(key):
                i, j = map(int, str(key).split(","))
                idx = (i - 1) * d + (j - 1)
            else:
                idx = ord(str(key)) - ord("a")
            exps[idx] += int(e)
        _add_term(terms, tuple(exps), Fraction(str(t.get("coeff", 1))))
    poly = Polynomial(nvars, terms)
    if poly.is_zero:
        raise ZeroPolynomial("entry polynomial is identically zero")
    return EntryPolynomial(d, poly, label)
