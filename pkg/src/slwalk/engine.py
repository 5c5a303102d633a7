"""Seeded parallel simulation of right random walks S_n = X_n ... X_1.

Replica streams are derived from the master seed by counter-based
splitting (one Philox stream per replica index), so datasets are
bit-identical for a fixed seed regardless of worker count: replicas are
processed in fixed-size blocks, each block's arrays depend only on the
seed and replica indices, and blocks are merged in index order.

Statistics are streaming plugins sampled on a step grid.  A plugin
declares which chains it needs: the source product, exterior-power
images, representation images (kept in the weight-orthonormal basis),
inverse-order products for twisted consumers, and exact integer mirrors
for measures with rational atoms.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import (
    BadEpsilon,
    BadWeights,
    DimensionMismatch,
    InexactAtoms,
    NonUnimodularAtom,
    PluginFailure,
)
from .matkit import SquareMatrix, wedge_power_matrix
from .reps import Representation

_BLOCK = 2048


# -- measures -------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureSpec:
    """Finitely supported probability measure on SL_d."""

    atoms: Tuple[SquareMatrix, ...]
    weights: Tuple[Fraction, ...]
    label: str = ""

    def __post_init__(self):
        if not self.atoms:
            raise BadWeights("measure needs at least one atom")
        if len(self.atoms) != len(self.weights):
            raise BadWeights("atom and weight counts disagree")
        object.__setattr__(
            self, "weights", tuple(Fraction(w) for w in self.weights)
        )

    @property
    def dim(self) -> int:
        return self.atoms[0].dim

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def exact(self) -> bool:
        return all(a.exact is not None for a in self.atoms)

    @property
    def weights_float(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def atom_stack(self) -> np.ndarray:
        return np.ascontiguousarray(
            np.stack([a.entries for a in self.atoms]), dtype=np.float64
        )

    def inverse_atoms(self) -> Tuple[SquareMatrix, ...]:
        return tuple(a.inverse() for a in self.atoms)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [[list(map(float, row)) for row in a.entries] for a in self.atoms],
            "weights": [str(w) for w in self.weights],
            "exact": self.exact,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasureSpec":
        atoms = tuple(SquareMatrix.from_rows(rows) for rows in data["atoms"])
        weights = tuple(Fraction(str(w)) for w in data["weights"])
        return cls(atoms, weights, data.get("label", ""))


@dataclass(frozen=True)
class MeasureReport:
    valid: bool
    symmetric: bool
    warnings: Tuple[str, ...]


def validate_measure(m: MeasureSpec) -> MeasureReport:
    """Check weight and determinant invariants; detect inverse-closure.

    A symmetric atom set (closed under inverse with matching weights) is
    reported as a warning flag: it forces the middle Lyapunov exponents to
    vanish and blocks piece separation for wedge-sum linearizations.
    """
    wf = m.weights_float
    if np.any(wf <= 0):
        raise BadWeights("weights must be positive")
    if abs(float(sum(m.weights)) - 1.0) > 1e-12:
        raise BadWeights(f"weights sum to {float(sum(m.weights))!r}, not 1")
    for i, a in enumerate(m.atoms):
        if a.dim != m.dim:
            raise DimensionMismatch(f"atom {i} has dim {a.dim} != {m.dim}")
        if not a.check_unimodular():
            raise NonUnimodularAtom(f"atom {i} determinant differs from 1")
    symmetric = _is_symmetric(m)
    warnings = []
    if symmetric:
        warnings.append(
            "atom set is closed under inverses with matching weights; "
            "middle Lyapunov exponents vanish by symmetry"
        )
    return MeasureReport(True, symmetric, tuple(warnings))


def _atoms_equal(a: SquareMatrix, b: SquareMatrix) -> bool:
    if a.exact is not None and b.exact is not None:
        ra = a.exact.reduced()
        rb = b.exact.reduced()
        return ra.num == rb.num and ra.den == rb.den
    return np.allclose(a.entries, b.entries, rtol=1e-12, atol=1e-12)


def _is_symmetric(m: MeasureSpec) -> bool:
    for a, w in zip(m.atoms, m.weights):
        inv = a.inverse()
        matched = False
        for b, wb in zip(m.atoms, m.weights):
            if wb == w and _atoms_equal(inv, b):
                matched = True
                break
        if not matched:
            return False
    return True


def perturbation_measure(
    base: MeasureSpec, spike: SquareMatrix, epsilon
) -> MeasureSpec:
    """(1 - eps) * base + eps * delta_spike, duplicates merged."""
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise BadEpsilon(f"epsilon {epsilon!r} outside (0, 1)")
    if spike.dim != base.dim:
        raise DimensionMismatch("spike dimension disagrees with base measure")
    if not spike.check_unimodular():
        raise NonUnimodularAtom("spike determinant differs from 1")
    atoms = list(base.atoms)
    weights = [w * (1 - eps) for w in base.weights]
    for i, a in enumerate(atoms):
        if _atoms_equal(a, spike):
            weights[i] += eps
            break
    else:
        atoms.append(spike)
        weights.append(eps)
    label = f"{base.label}+spike(eps={eps})" if base.label else f"spike(eps={eps})"
    return MeasureSpec(tuple(atoms), tuple(weights), label)


# -- presets ---------------------------------------------------------------------


def preset_measure(name: str) -> MeasureSpec:
    if name == "sl2-sanov":
        rows = [
            [[1, 2], [0, 1]],
            [[1, -2], [0, 1]],
            [[1, 0], [2, 1]],
            [[1, 0], [-2, 1]],
        ]
        atoms = tuple(SquareMatrix.from_rows(r) for r in rows)
        return MeasureSpec(atoms, (Fraction(1, 4),) * 4, "sl2-sanov")
    if name == "sl3-elem":
        atoms = []
        for i in range(3):
            for j in range(3):
                if i != j:
                    for s in (1, -1):
                        atoms.append(SquareMatrix.elementary(3, i, j, s))
        return MeasureSpec(tuple(atoms), (Fraction(1, 12),) * 12, "sl3-elem")
    raise KeyError(f"unknown measure preset {name!r}")


def load_measure(path_or_name: str) -> MeasureSpec:
    try:
        return preset_measure(path_or_name)
    except KeyError:
        with open(path_or_name, "r", encoding="utf-8") as fh:
            return MeasureSpec.from_dict(json.load(fh))


# -- chain requirements -----------------------------------------------------------


@dataclass(frozen=True)
class Requirements:
    """What a plugin needs the engine to maintain."""

    wedge_powers: frozenset = frozenset()
    reps: Tuple[Tuple[str, Representation, str], ...] = ()  # (key, rep, side)
    exact: bool = False
    exact_inverse: bool = False
    source_inverse: bool = False

    def merge(self, other: "Requirements") -> "Requirements":
        merged = {}
        for key, rep, side in self.reps + other.reps:
            if key in merged and (merged[key][1].label, merged[key][2]) != (rep.label, side):
                raise ValueError(f"conflicting rep chains registered under key {key!r}")
            merged[key] = (key, rep, side)
        return Requirements(
            self.wedge_powers | other.wedge_powers,
            tuple(merged.values()),
            self.exact or other.exact,
            self.exact_inverse or other.exact_inverse,
            self.source_inverse or other.source_inverse,
        )


class Plugin:
    """Pure per-step statistic extractor; subclasses set name and fields."""

    name = "plugin"
    fields: Tuple[str, ...] = ()

    def requirements(self) -> Requirements:
        return Requirements()

    def extract(self, ctx: "StepContext") -> Dict[str, np.ndarray]:
        raise NotImplementedError


class StepContext:
    """Chain state for one replica block at one grid step."""

    def __init__(self, n, measure, chains, exact_state):
        self.n = n
        self.measure = measure
        self._chains = chains
        self._exact = exact_state
        self._svd_cache = {}

    def chain(self, key: str):
        """(dirs, logs) of the renormalized chain with the given key."""
        return self._chains[key]

    @property
    def dirs(self):
        return self._chains["src"][0]

    @property
    def logs(self):
        return self._chains["src"][1]

    def svd(self, key: str = "src"):
        if key not in self._svd_cache:
            dirs, _ = self._chains[key]
            self._svd_cache[key] = np.linalg.svd(dirs)
        return self._svd_cache[key]

    def top_log_sv(self, key: str = "src"):
        """log sigma_1 of the true product for the chain."""
        dirs, logs = self._chains[key]
        s = np.linalg.svd(dirs, compute_uv=False)
        return logs + np.log(s[..., 0])

    def log_sv_sums(self, wedge_powers: Sequence[int]):
        """log(sigma_1*...*sigma_k) for each requested k via wedge chains."""
        out = {1: self.top_log_sv("src")}
        for k in wedge_powers:
            out[k] = self.top_log_sv(f"wedge:{k}")
        return out

    def exact_products(self):
        """(nums, dens): object arrays of integer numerators (B,d,d) and
        denominators (B,) with S_n = nums/dens entrywise."""
        if self._exact is None or "fwd" not in self._exact:
            raise InexactAtoms("exact chain not maintained for this run")
        return self._exact["fwd"]

    def exact_inverse_products(self):
        if self._exact is None or "inv" not in self._exact:
            raise InexactAtoms("exact inverse chain not maintained for this run")
        return self._exact["inv"]


@dataclass
class WalkDataset:
    """Per-replica statistic values on the step grid; bit-reproducible."""

    measure_label: str
    seed: int
    replicas: int
    n_grid: Tuple[int, ...]
    columns: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: Dict[str, str] = field(default_factory=dict)

    def column(self, plugin: str, fieldname: str) -> np.ndarray:
        return self.columns[f"{plugin}.{fieldname}"]

    def to_json_bytes(self) -> bytes:
        payload = {
            "measure": self.measure_label,
            "seed": self.seed,
            "replicas": self.replicas,
            "n_grid": list(self.n_grid),
            "meta": dict(sorted(self.meta.items())),
        }
        cols = {}
        for k in sorted(self.columns):
            arr = np.asarray(self.columns[k])
            cols[k] = [
                [format(float(v), ".17g") for v in np.atleast_1d(row).ravel()]
                for row in arr.reshape(arr.shape[0], -1)
            ]
        payload["columns"] = cols
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


# -- exact integer chains ----------------------------------------------------------


def _exact_atom_stacks(atoms: Sequence[SquareMatrix]):
    nums = np.array([[list(row) for row in a.exact.num] for a in atoms], dtype=object)
    dens = np.array([a.exact.den for a in atoms], dtype=object)
    return nums, dens


def _exact_identity(block: int, d: int):
    nums = np.empty((block, d, d), dtype=object)
    for i in range(d):
        for j in range(d):
            nums[:, i, j] = 1 if i == j else 0
    dens = np.empty(block, dtype=object)
    dens[:] = 1
    return nums, dens


def _step_exact(nums, dens, atom_nums, atom_dens, idx_col, right=False):
    d = nums.shape[1]
    sel = atom_nums[idx_col]
    out = np.empty_like(nums)
    for i in range(d):
        for j in range(d):
            if right:
                acc = nums[:, i, 0] * sel[:, 0, j]
                for k in range(1, d):
                    acc = acc + nums[:, i, k] * sel[:, k, j]
            else:
                acc = sel[:, i, 0] * nums[:, 0, j]
                for k in range(1, d):
                    acc = acc + sel[:, i, k] * nums[:, k, j]
            out[:, i, j] = acc
    return out, dens * atom_dens[idx_col]


# -- the engine --------------------------------------------------------------------


def replica_indices(
    measure: MeasureSpec, seed: int, replica: int, n_max: int, channel: int = 0
) -> np.ndarray:
    """Atom index stream for one replica: counter-split Philox, inverse-CDF.

    The channel separates independent walk families sharing one master
    seed (e.g. the two sides of a paired-walk experiment)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(0, channel, replica))
    gen = np.random.Generator(np.random.Philox(ss))
    cum = np.cumsum(measure.weights_float)
    cum[-1] = 1.0
    u = gen.random(n_max)
    return np.searchsorted(cum, u, side="right").astype(np.int64)


def _block_index_matrix(measure, seed, r0, r1, n_max, channel):
    idx = np.empty((r1 - r0, n_max), dtype=np.int64)
    for b, r in enumerate(range(r0, r1)):
        idx[b] = replica_indices(measure, seed, r, n_max, channel)
    return np.ascontiguousarray(idx)


def _chain_atom_stacks(measure: MeasureSpec, reqs: Requirements):
    """(key -> (atom_stack, side, dim)) for every float chain to maintain."""
    stacks = {"src": (measure.atom_stack(), "left")}
    if reqs.source_inverse:
        inv = np.ascontiguousarray(
            np.stack([a.inverse().entries for a in measure.atoms])
        )
        stacks["src_inv"] = (inv, "right")
    for k in sorted(reqs.wedge_powers):
        wk = np.ascontiguousarray(
            np.stack(
                [wedge_power_matrix(a, k).entries for a in measure.atoms]
            )
        )
        stacks[f"wedge:{k}"] = (wk, "left")
    for key, rep, side in reqs.reps:
        if side == "left":
            imgs = [rep.apply_good(a) for a in measure.atoms]
        elif side == "right_inv":
            imgs = [rep.apply_good(a.inverse()) for a in measure.atoms]
        else:
            raise ValueError(f"unknown rep side {side!r}")
        stacks[f"rep:{key}"] = (
            np.ascontiguousarray(np.stack(imgs)),
            "left" if side == "left" else "right",
        )
    return stacks


def _run_block(measure, stacks, reqs, n_grid, plugins, seed, r0, r1, exact_stacks, channel):
    n_max = n_grid[-1]
    idx = _block_index_matrix(measure, seed, r0, r1, n_max, channel)
    block = r1 - r0
    chains = {}
    for key, (stack, side) in stacks.items():
        dim = stack.shape[1]
        dirs = np.ascontiguousarray(
            np.broadcast_to(np.eye(dim), (block, dim, dim)).copy()
        )
        logs = np.zeros(block)
        chains[key] = [dirs, logs, side]
    exact_state = None
    if exact_stacks is not None:
        exact_state = {}
        for key, (anums, adens, right) in exact_stacks.items():
            nums, dens = _exact_identity(block, measure.dim)
            exact_state[key] = [nums, dens, anums, adens, right]

    results = {}
    t0 = 0
    for gi, n in enumerate(n_grid):
        for key, (dirs, logs, side) in ((k, tuple(v)) for k, v in chains.items()):
            kernels.step_matrix_chains(
                stacks[key][0], idx, dirs, logs, t0, n, side == "right"
            )
        if exact_state is not None:
            for key, st in exact_state.items():
                nums, dens, anums, adens, right = st
                for t in range(t0, n):
                    nums, dens = _step_exact(nums, dens, anums, adens, idx[:, t], right)
                st[0], st[1] = nums, dens
        ctx = StepContext(
            n,
            measure,
            {k: (v[0], v[1]) for k, v in chains.items()},
            None
            if exact_state is None
            else {
                ("fwd" if not st[4] else "inv"): (st[0], st[1])
                for st in exact_state.values()
            },
        )
        for plugin in plugins:
            try:
                vals = plugin.extract(ctx)
            except Exception as exc:  # noqa: BLE001 - wrapped with location info
                raise PluginFailure(plugin.name, n, (r0, r1), exc) from exc
            for fname, arr in vals.items():
                key = f"{plugin.name}.{fname}"
                arr = np.asarray(arr)
                if key not in results:
                    results[key] = np.zeros((len(n_grid),) + arr.shape, dtype=arr.dtype)
                results[key][gi] = arr
        t0 = n
    return results


def run_replicas(
    measure: MeasureSpec,
    n_grid: Sequence[int],
    replicas: int,
    plugins: Sequence[Plugin],
    seed: int,
    threads: int = 1,
    channel: int = 0,
) -> WalkDataset:
    """Simulate `replicas` independent walks, sampling plugins on n_grid.

    Identical (seed, n_grid, replicas, plugins) produce identical datasets
    for any `threads`; block boundaries are fixed and merged in order.
    """
    n_grid = tuple(sorted(set(int(n) for n in n_grid)))
    if not n_grid or n_grid[0] < 1:
        raise ValueError("n_grid must contain positive steps")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    validate_measure(measure)

    reqs = Requirements()
    for p in plugins:
        reqs = reqs.merge(p.requirements())
    if (reqs.exact or reqs.exact_inverse) and not measure.exact:
        raise InexactAtoms(
            "plugin requires exact arithmetic but measure atoms are not exact"
        )
    stacks = _chain_atom_stacks(measure, reqs)
    exact_stacks = None
    if reqs.exact or reqs.exact_inverse:
        exact_stacks = {}
        if reqs.exact:
            anums, adens = _exact_atom_stacks(measure.atoms)
            exact_stacks["fwd"] = (anums, adens, False)
        if reqs.exact_inverse:
            anums, adens = _exact_atom_stacks(measure.inverse_atoms())
            exact_stacks["inv"] = (anums, adens, True)

    blocks = [(r0, min(r0 + _BLOCK, replicas)) for r0 in range(0, replicas, _BLOCK)]
    worker = lambda br: _run_block(  # noqa: E731
        measure, stacks, reqs, n_grid, plugins, seed, br[0], br[1], exact_stacks, channel
    )
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(worker, blocks))
    else:
        partials = [worker(br) for br in blocks]

    columns = {}
    for key in partials[0]:
        columns[key] = np.concatenate([p[key] for p in partials], axis=1)
    ds = WalkDataset(
        measure.label, int(seed), int(replicas), n_grid, columns,
        meta={"backend": kernels.BACKEND},
    )
    return ds


def run_vector_trajectory(
    measure: MeasureSpec,
    atom_images: np.ndarray,
    start: np.ndarray,
    steps: int,
    seed: int,
    stream: int,
) -> np.ndarray:
    """One long vector chain; returns the per-step log norm increments.

    Streams are split from the master seed on a channel disjoint from the
    replica channel (spawn key (1, stream)).
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(1, stream))
    gen = np.random.Generator(np.random.Philox(ss))
    cum = np.cumsum(measure.weights_float)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, gen.random(steps), side="right").astype(np.int64)
    vec = np.array(start, dtype=np.float64)
    vec /= np.linalg.norm(vec)
    out = np.empty(steps)
    kernels.step_vector_chain_trace(
        np.ascontiguousarray(atom_images, dtype=np.float64), idx, vec, 0, steps, out
    )
    return out
