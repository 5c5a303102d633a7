"""Command-line entry point.

Commands tie measures, varieties and representations to experiments and
emit reproducible CSV/JSON reports named from (command, label, seed).
Re-running an identical configuration reproduces identical bytes for
every artifact except the manifest, which records wall-clock runtime,
versions, the kernel backend and the configuration hash.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import scipy

from . import __version__, kernels
from .errors import ConfigError, SlwalkError
from .engine import load_measure, validate_measure
from .linearize import linearize_entry_polynomial, preset_variety
from .matkit import (
    cartan_projection,
    jordan_projection,
    parse_matrix_json,
    parse_matrix_text,
    svd_cartan,
)
from .polynomials import parse_entry_polynomial
from .reports import decay_csv, json_text, trace_csv, write_text
from .reps import parse_rep_descriptor
from .spectral import interior_check, lyapunov_top, lyapunov_vector
from .experiments import escape_curve, genericity_experiment, trace_growth

_COMMANDS = (
    "cartan",
    "lyapunov",
    "escape",
    "trace",
    "linearize",
    "genericity",
    "validate",
)

_DEFAULT_GRID = (5, 10, 20, 40, 80, 160)


@dataclass
class RunConfig:
    command: str
    seed: int
    out: str = "."
    threads: int = 1
    replicas: int = 10_000
    n: int = 200
    n_grid: Tuple[int, ...] = _DEFAULT_GRID
    measure: str = ""
    measure2: str = ""
    variety: str = ""
    rep: str = ""
    poly: str = ""
    dim: int = 3
    matrix: str = ""
    budget: int = 2_000_000
    samples: int = 0
    max_word_len: int = 6
    extras: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_sources(cls, config_path: Optional[str], overrides: dict) -> "RunConfig":
        data: Dict[str, object] = {}
        if config_path:
            try:
                with open(config_path, "r", encoding="utf-8") as fh:
                    data.update(json.load(fh))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"config: cannot read {config_path}: {exc}") from exc
        for k, v in overrides.items():
            if v is not None:
                data[k] = v
        if "command" not in data:
            raise ConfigError("command: missing (give a subcommand or config field)")
        if data["command"] not in _COMMANDS:
            raise ConfigError(f"command: unknown {data['command']!r}")
        if "seed" not in data or data["seed"] is None:
            raise ConfigError("seed: mandatory, no wall-clock default")
        known = {f for f in cls.__dataclass_fields__ if f != "extras"}
        kwargs = {k: v for k, v in data.items() if k in known}
        extras = {k: v for k, v in data.items() if k not in known}
        cfg = cls(extras=extras, **kwargs)
        cfg.seed = int(cfg.seed)
        cfg.threads = int(cfg.threads)
        cfg.replicas = int(cfg.replicas)
        grid = tuple(int(x) for x in cfg.n_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])) or (grid and grid[0] < 1):
            raise ConfigError(f"n_grid: must be strictly increasing positive, got {list(grid)}")
        cfg.n_grid = grid
        return cfg

    def canonical(self) -> dict:
        payload = {
            k: getattr(self, k)
            for k in sorted(self.__dataclass_fields__)
            if k != "extras"
        }
        payload["n_grid"] = list(self.n_grid)
        payload.update({k: self.extras[k] for k in sorted(self.extras)})
        return payload

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _load_variety(cfg: RunConfig):
    if not cfg.variety and cfg.poly:
        return parse_entry_polynomial(cfg.poly, cfg.dim, "poly")
    try:
        return preset_variety(cfg.variety)
    except KeyError:
        pass
    if Path(cfg.variety).exists():
        text = Path(cfg.variety).read_text(encoding="utf-8").strip()
        return parse_entry_polynomial(text, cfg.dim, Path(cfg.variety).stem)
    raise ConfigError(f"variety: unknown preset or missing file {cfg.variety!r}")


def _emit(cfg: RunConfig, base: str, csv_text: Optional[str], summary: dict, warnings=()):
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if csv_text is not None:
        path = outdir / f"{base}.csv"
        write_text(path, csv_text)
        written.append(path.name)
    path = outdir / f"{base}.json"
    write_text(path, json_text(summary))
    written.append(path.name)
    return written


def _manifest(cfg: RunConfig, base: str, written, runtime: float, warnings=()):
    outdir = Path(cfg.out)
    manifest = {
        "command": cfg.command,
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "outputs": sorted(written),
        "runtime_seconds": runtime,
        "versions": {
            "slwalk": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": kernels.BACKEND,
        },
        "warnings": list(warnings),
    }
    write_text(outdir / f"{base}.manifest.json", json_text(manifest))


def _cmd_validate(cfg: RunConfig):
    measure = load_measure(cfg.measure)
    report = validate_measure(measure)
    base = f"validate_{measure.label or 'measure'}_seed{cfg.seed}"
    summary = {
        "measure": measure.label,
        "atoms": measure.n_atoms,
        "dim": measure.dim,
        "exact": measure.exact,
        "symmetric": report.symmetric,
        "valid": report.valid,
    }
    return base, None, summary, report.warnings


def _cmd_cartan(cfg: RunConfig):
    if not cfg.matrix:
        raise ConfigError("matrix: required for the cartan command")
    text = Path(cfg.matrix).read_text(encoding="utf-8")
    try:
        g = parse_matrix_json(text)
    except (json.JSONDecodeError, ValueError):
        g = parse_matrix_text(text)
    triple = svd_cartan(g)
    summary = {
        "dim": g.dim,
        "cartan_projection": cartan_projection(g).coords,
        "jordan_projection": jordan_projection(g).coords,
        "k_left": triple.k_left,
        "a": triple.a,
        "u_right": triple.u_right,
    }
    base = f"cartan_{Path(cfg.matrix).stem}_seed{cfg.seed}"
    csv_lines = ["n,estimate,ci_lo,ci_hi,exact"]
    for i, v in enumerate(cartan_projection(g).coords):
        csv_lines.append(f"{i},{format(v, '.17g')},{format(v, '.17g')},{format(v, '.17g')},")
    return base, "\n".join(csv_lines) + "\n", summary, ()


def _cmd_lyapunov(cfg: RunConfig):
    measure = load_measure(cfg.measure)
    if cfg.rep:
        rep = parse_rep_descriptor(cfg.rep, measure.dim)
        est = lyapunov_top(measure, rep, cfg.n, cfg.replicas, cfg.seed, cfg.threads)
        summary = {
            "method": est.method,
            "value": est.value,
            "half_width": est.half_width,
            "n": est.n,
            "replicas": est.replicas,
            "extra": {k: est.extra[k] for k in sorted(est.extra)},
        }
        label = f"{measure.label}_{cfg.rep.replace(':', '-')}"
        csv_text = "n,estimate,ci_lo,ci_hi,exact\n" + (
            f"{est.n},{format(est.value, '.17g')},"
            f"{format(est.value - est.half_width, '.17g')},"
            f"{format(est.value + est.half_width, '.17g')},\n"
        )
    else:
        est = lyapunov_vector(measure, cfg.n, cfg.replicas, cfg.seed, cfg.threads)
        verdicts = interior_check(est)
        summary = {
            "method": est.method,
            "coords": est.value,
            "half_width": est.half_width,
            "gaps": est.extra["gaps"],
            "gap_half_width": est.extra["gap_half_width"],
            "interior_verdicts": verdicts,
            "n": est.n,
            "replicas": est.replicas,
        }
        label = f"{measure.label}_vector"
        lines = ["n,estimate,ci_lo,ci_hi,exact"]
        for i, (v, h) in enumerate(zip(np.atleast_1d(est.value), np.atleast_1d(est.half_width))):
            lines.append(
                f"{i},{format(v, '.17g')},{format(v - h, '.17g')},{format(v + h, '.17g')},"
            )
        csv_text = "\n".join(lines) + "\n"
    base = f"lyapunov_{label}_seed{cfg.seed}"
    return base, csv_text, summary, ()


def _cmd_escape(cfg: RunConfig):
    measure = load_measure(cfg.measure)
    variety = _load_variety(cfg)
    report = escape_curve(
        measure, variety, cfg.n_grid, cfg.replicas, cfg.seed, cfg.threads, cfg.budget
    )
    label = getattr(variety, "label", "variety")
    base = f"escape_{measure.label}_{label}_seed{cfg.seed}"
    return base, decay_csv(report), report.summary(), ()


def _cmd_trace(cfg: RunConfig):
    measure = load_measure(cfg.measure)
    variety = _load_variety(cfg)
    report = trace_growth(
        measure, variety, cfg.n_grid, cfg.replicas, cfg.seed, cfg.threads
    )
    base = f"trace_{measure.label}_{variety.label}_seed{cfg.seed}"
    return base, trace_csv(report), report.summary(), ()


def _cmd_linearize(cfg: RunConfig):
    if not cfg.poly:
        raise ConfigError("poly: required for the linearize command")
    q = parse_entry_polynomial(cfg.poly, cfg.dim, "poly")
    lv = linearize_entry_polynomial(q, cfg.samples, cfg.seed)
    summary = {
        "polynomial": q.to_text(),
        "dim": cfg.dim,
        "span_dimension": lv.rep.dim,
        "start_vector": lv.start_vector,
        "functional": lv.functional,
        "twist": lv.twist,
    }
    base = f"linearize_poly_seed{cfg.seed}"
    return base, None, summary, ()


def _cmd_genericity(cfg: RunConfig):
    m1 = load_measure(cfg.measure)
    m2 = load_measure(cfg.measure2 or cfg.measure)
    report = genericity_experiment(
        m1,
        m2,
        cfg.n_grid,
        cfg.replicas,
        cfg.seed,
        relation_word_len=cfg.max_word_len,
        threads=cfg.threads,
    )
    base = f"genericity_{m1.label}_{m2.label}_seed{cfg.seed}"
    csv_text = decay_csv(report.witness_failure)
    return base, csv_text, report.summary(), ()


_DISPATCH = {
    "validate": _cmd_validate,
    "cartan": _cmd_cartan,
    "lyapunov": _cmd_lyapunov,
    "escape": _cmd_escape,
    "trace": _cmd_trace,
    "linearize": _cmd_linearize,
    "genericity": _cmd_genericity,
}


def run_config(cfg: RunConfig) -> int:
    start = time.monotonic()
    base, csv_text, summary, warnings = _DISPATCH[cfg.command](cfg)
    written = _emit(cfg, base, csv_text, summary, warnings)
    _manifest(cfg, base, written, time.monotonic() - start, warnings)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slwalk",
        description="random matrix products on SL_d: escape rates, Lyapunov data, genericity",
    )
    parser.add_argument("command", nargs="?", choices=_COMMANDS + ("run",))
    parser.add_argument("--config", default=None, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--replicas", type=int, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--n-grid", dest="n_grid", default=None,
                        help="comma-separated strictly increasing steps")
    parser.add_argument("--measure", default=None, help="preset name or JSON file")
    parser.add_argument("--measure2", default=None)
    parser.add_argument("--variety", default=None, help="v1, v2 or polynomial file")
    parser.add_argument("--rep", default=None, help="representation descriptor")
    parser.add_argument("--poly", default=None, help="entry polynomial text")
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--matrix", default=None, help="matrix literal file")
    parser.add_argument("--budget", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--max-word-len", dest="max_word_len", type=int, default=None)
    args = parser.parse_args(argv)

    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    if args.command == "run" or args.command is None:
        overrides.pop("command", None)
    if args.n_grid is not None:
        try:
            overrides["n_grid"] = [int(x) for x in str(args.n_grid).split(",") if x]
        except ValueError:
            print("error: n_grid: not a comma-separated integer list", file=sys.stderr)
            return 2

    try:
        cfg = RunConfig.from_sources(args.config, overrides)
        return run_config(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SlwalkError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
