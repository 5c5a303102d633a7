"""Exact enumeration oracle for escape probabilities.

Computes p_n = P(predicate(S_n)) as an exact rational by dynamic
programming over distinct states instead of raw word enumeration: group
elements collapse heavily for the bundled generating sets, and for
linearized varieties the walk can be projected to the orbit vector
rho(S_n) x, where gcd/sign reduction merges projectively equal states
(membership is a linear-functional zero test, so the reduction is safe).

Probabilities are integer mass counts over the common weight denominator,
so the results are exact for any rational weights.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, Sequence

import numpy as np

from .errors import BudgetExceeded, InexactAtoms
from .engine import MeasureSpec
from .polynomials import EntryPolynomial

_STATE_CAP = 6_000_000
_INT64_GUARD = 2**61


def _weight_mass(measure: MeasureSpec):
    """Integer weight numerators over a common denominator."""
    denom = 1
    for w in measure.weights:
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    nums = [int(w * denom) for w in measure.weights]
    return nums, denom


def _check_budget(measure: MeasureSpec, n: int, budget: int):
    words = measure.n_atoms**n
    if words > budget:
        raise BudgetExceeded(
            f"{measure.n_atoms}^{n} = {words} words exceeds budget {budget}"
        )


def _counts_dtype(mass_denom: int, n: int):
    # total mass = denom**n; stay in int64 only when it cannot overflow
    return np.int64 if n * math.log2(max(mass_denom, 2)) < 62 else object


def _aggregate(new_states: np.ndarray, new_counts: np.ndarray):
    uniq, inv = np.unique(new_states, axis=0, return_inverse=True)
    agg = np.zeros(len(uniq), dtype=new_counts.dtype)
    np.add.at(agg, inv.ravel(), new_counts)
    return uniq, agg


def _canonicalize_rows(vecs: np.ndarray) -> np.ndarray:
    """Divide each integer row by its gcd and fix the leading sign."""
    g = np.gcd.reduce(np.abs(vecs), axis=1)
    g[g == 0] = 1
    vecs = vecs // g[:, None]
    nz = vecs != 0
    first = np.argmax(nz, axis=1)
    lead = vecs[np.arange(len(vecs)), first]
    sign = np.where(lead < 0, -1, 1)
    return vecs * sign[:, None]


class PolynomialPredicate:
    """Membership event Q(S_n) = 0 for an integer-coefficient entry polynomial."""

    def __init__(self, q: EntryPolynomial):
        self.q = q

    def batch(self, states: np.ndarray, dens) -> np.ndarray:
        """states: (N, d, d) integer numerators (int64 or object), dens: (N,)
        or scalar denominators.  Returns a boolean member mask, exactly."""
        n_states = states.shape[0]
        d = self.q.d
        flat = states.reshape(n_states, d * d).astype(object)
        dens = np.broadcast_to(np.asarray(dens, dtype=object), (n_states,))
        deg = self.q.degree
        total = np.zeros(n_states, dtype=object)
        total[:] = 0
        for exps, c in self.q.poly.terms.items():
            term = np.full(n_states, int(c.numerator), dtype=object)
            if c.denominator != 1:
                raise InexactAtoms("predicate polynomial must have integer coefficients")
            term = term * dens ** (deg - sum(exps))
            for i, e in enumerate(exps):
                if e:
                    term = term * flat[:, i] ** e
            total = total + term
        return np.array([v == 0 for v in total], dtype=bool)


def exact_event_curve(
    measure: MeasureSpec,
    predicate,
    ns: Sequence[int],
    budget: int = 2_000_000,
) -> Dict[int, Fraction]:
    """Exact p_n for each n in ns by group-element DP.

    predicate must expose batch(states, dens) as PolynomialPredicate does.
    """
    if not measure.exact:
        raise InexactAtoms("exact enumeration requires exact atoms")
    ns = sorted(set(int(n) for n in ns))
    if not ns:
        return {}
    n_max = ns[-1]
    _check_budget(measure, n_max, budget)
    mass, denom = _weight_mass(measure)
    d = measure.dim

    atom_nums = [a.exact.num for a in measure.atoms]
    atom_dens = [a.exact.den for a in measure.atoms]
    int64_safe = all(dv == 1 for dv in atom_dens)

    cdtype = _counts_dtype(denom, n_max)
    mass_arr = np.array(mass, dtype=cdtype)

    if int64_safe:
        atoms = np.array(atom_nums, dtype=np.int64)  # (m, d, d)
        states = np.eye(d, dtype=np.int64).reshape(1, d * d)
        counts = np.ones(1, dtype=cdtype)
        out: Dict[int, Fraction] = {}
        dens_track = 1
        for level in range(1, n_max + 1):
            if np.abs(states).max(initial=0) * np.abs(atoms).sum(axis=2).max() * d >= _INT64_GUARD:
                raise BudgetExceeded(
                    "entries would overflow the int64 enumeration window; "
                    "lower n or use the float Monte Carlo estimate"
                )
            cur = states.reshape(-1, d, d)
            new = np.einsum("aij,sjk->asik", atoms, cur).reshape(-1, d * d)
            new_counts = (counts[None, :] * mass_arr[:, None]).reshape(-1)
            states, counts = _aggregate(new, new_counts)
            if len(states) > min(budget, _STATE_CAP):
                raise BudgetExceeded(
                    f"{len(states)} states at level {level} exceed the state cap"
                )
            if level in ns:
                member = predicate.batch(states.reshape(-1, d, d), dens_track)
                hit = counts[member].sum()
                out[level] = Fraction(int(hit), denom**level)
        return out

    # rational atoms: dict DP over (numerator tuple, den) with Fraction mass
    from .matkit import ExactMatrix

    state_map = {(_ident_key(d), 1): Fraction(1)}
    out = {}
    for level in range(1, n_max + 1):
        new_map: Dict[tuple, Fraction] = {}
        for (num_key, den), p in state_map.items():
            for ai in range(measure.n_atoms):
                # left walk: atom multiplies on the left
                prod = ExactMatrix(atom_nums[ai], atom_dens[ai]).matmul(
                    ExactMatrix(num_key, den)
                )
                key = (prod.num, prod.den)
                w = p * measure.weights[ai]
                new_map[key] = new_map.get(key, Fraction(0)) + w
        state_map = new_map
        if len(state_map) > min(budget, _STATE_CAP):
            raise BudgetExceeded(f"{len(state_map)} states at level {level}")
        if level in ns:
            keys = list(state_map.keys())
            nums = np.array([[list(r) for r in k[0]] for k in keys], dtype=object)
            dens = np.array([k[1] for k in keys], dtype=object)
            member = predicate.batch(nums, dens)
            out[level] = sum(
                (state_map[k] for k, mbit in zip(keys, member) if mbit),
                Fraction(0),
            )
    return out


def _ident_key(d: int):
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def exact_enumeration(
    measure: MeasureSpec, predicate, n: int, budget: int = 2_000_000
) -> Fraction:
    """Exact probability that the predicate holds at step n.

    predicate may be a PolynomialPredicate (or anything with its batch
    interface).  n = 0 evaluates the predicate at the identity.
    """
    if n == 0:
        d = measure.dim
        ident = np.array(_ident_key(d), dtype=object).reshape(1, d, d)
        member = predicate.batch(ident, 1)
        return Fraction(1) if bool(member[0]) else Fraction(0)
    return exact_event_curve(measure, predicate, [n], budget)[n]


def exact_orbit_escape_curve(
    measure: MeasureSpec,
    atom_rep_nums: Sequence,
    start: Sequence[int],
    functional: Sequence[int],
    ns: Sequence[int],
    budget: int = 2_000_000,
    right_mult: bool = False,
) -> Dict[int, Fraction]:
    """Exact p_n = P(functional(rho(S_n) x) = 0) by vector-state DP.

    atom_rep_nums are the integer numerator matrices of the rep images of
    the atoms (denominators dropped: the zero test is scale invariant, and
    states are gcd/sign-canonicalized so projectively equal orbit vectors
    merge).  This is the fast path behind the escape-curve oracle.
    """
    if not measure.exact:
        raise InexactAtoms("exact enumeration requires exact atoms")
    ns = sorted(set(int(n) for n in ns))
    if not ns:
        return {}
    n_max = ns[-1]
    _check_budget(measure, n_max, budget)
    mass, denom = _weight_mass(measure)
    cdtype = _counts_dtype(denom, n_max)
    mass_arr = np.array(mass, dtype=cdtype)

    atoms = np.array([[list(r) for r in m] for m in atom_rep_nums], dtype=np.int64)
    nv = atoms.shape[1]
    f = np.array(list(functional), dtype=np.int64)
    states = _canonicalize_rows(np.array([list(start)], dtype=np.int64))
    counts = np.ones(1, dtype=cdtype)
    out: Dict[int, Fraction] = {}
    for level in range(1, n_max + 1):
        bound = np.abs(states).max(initial=0) * np.abs(atoms).sum(axis=2).max()
        if bound >= _INT64_GUARD:
            raise BudgetExceeded(
                "orbit vectors would overflow the int64 enumeration window"
            )
        if right_mult:
            new = np.einsum("sj,aji->asi", states, atoms).reshape(-1, nv)
        else:
            new = np.einsum("aij,sj->asi", atoms, states).reshape(-1, nv)
        new = _canonicalize_rows(new)
        new_counts = (mass_arr[:, None] * counts[None, :]).reshape(-1)
        states, counts = _aggregate(new, new_counts)
        if len(states) > min(budget, _STATE_CAP):
            raise BudgetExceeded(f"{len(states)} orbit states at level {level}")
        if level in ns:
            member = (states.astype(object) @ f.astype(object)) == 0
            hit = counts[member].sum()
            out[level] = Fraction(int(hit), denom**level)
    return out


def exact_source_orbit_curve(
    measure: MeasureSpec,
    orbit,
    ns: Sequence[int],
    budget: int = 2_000_000,
) -> Dict[int, Fraction]:
    """Exact p_n = P(P(S_n x) = 0) by DP on the source-space vectors S_n x.

    The defining polynomial need not be homogeneous, so states carry their
    denominator (no gcd merging); the zero test uses per-degree integer
    scaling.  Everything stays in int64 with overflow guards.
    """
    if not measure.exact:
        raise InexactAtoms("exact enumeration requires exact atoms")
    ns = sorted(set(int(n) for n in ns))
    if not ns:
        return {}
    n_max = ns[-1]
    _check_budget(measure, n_max, budget)
    mass, denom = _weight_mass(measure)
    cdtype = _counts_dtype(denom, n_max)
    mass_arr = np.array(mass, dtype=cdtype)

    d = measure.dim
    atoms = np.array([[list(r) for r in a.exact.num] for a in measure.atoms], dtype=np.int64)
    atom_dens = np.array([a.exact.den for a in measure.atoms], dtype=np.int64)

    xf = [Fraction(v) for v in orbit.x]
    xden = 1
    for v in xf:
        xden = xden * v.denominator // math.gcd(xden, v.denominator)
    x0 = np.array([int(v * xden) for v in xf], dtype=np.int64)

    # integerized polynomial terms
    tden = 1
    for c in orbit.poly.terms.values():
        tden = tden * c.denominator // math.gcd(tden, c.denominator)
    terms = [(int(c * tden), exps) for exps, c in orbit.poly.terms.items()]
    deg = orbit.poly.degree

    # state rows: (v_1..v_d, den); start state (x0, xden)
    states = np.concatenate([x0, [xden]])[None, :]
    counts = np.ones(1, dtype=cdtype)
    out: Dict[int, Fraction] = {}
    for level in range(1, n_max + 1):
        vmax = int(np.abs(states[:, :d]).max(initial=0))
        if vmax * int(np.abs(atoms).sum(axis=2).max()) >= _INT64_GUARD:
            raise BudgetExceeded("orbit vectors would overflow int64")
        if int(states[:, d].max(initial=1)) * int(atom_dens.max()) >= _INT64_GUARD:
            raise BudgetExceeded("denominators would overflow int64")
        newv = np.einsum("aij,sj->asi", atoms, states[:, :d])  # (m, S, d)
        newd = atom_dens[:, None] * states[None, :, d]  # (m, S)
        new = np.concatenate([newv, newd[:, :, None]], axis=2).reshape(-1, d + 1)
        new_counts = (mass_arr[:, None] * counts[None, :]).reshape(-1)
        states, counts = _aggregate(new, new_counts)
        if len(states) > min(budget, _STATE_CAP):
            raise BudgetExceeded(f"{len(states)} orbit states at level {level}")
        if level in ns:
            flat = states[:, :d].astype(object)
            dens = states[:, d].astype(object)
            total = np.zeros(len(states), dtype=object)
            total[:] = 0
            for coeff, exps in terms:
                term = np.full(len(states), coeff, dtype=object)
                term = term * dens ** (deg - sum(exps))
                for i, e in enumerate(exps):
                    if e:
                        term = term * flat[:, i] ** e
                total = total + term
            member = np.array([v == 0 for v in total], dtype=bool)
            hit = counts[member].sum()
            out[level] = Fraction(int(hit), denom**level)
    return out
