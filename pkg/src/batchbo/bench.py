"""Benchmark harness: CLI, seed sweeps, calibration and file outputs.

Output layout of a run or sweep directory::

    manifest.json                  resolved configs, seeds, file digests
    summary.csv                    one row per sweep cell
    <cell-id>/seed_<k>.csv         learning curve (iteration 0 = initial design)
    <cell-id>/seed_<k>_obs.csv     every observation with its noiseless value

All floats are written with 17 significant digits so files round-trip.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from batchbo import __version__
from batchbo.acquisition import AcquisitionKind, AcquisitionSpec, SearchBudget, incumbent
from batchbo.batch import BatchMethod, BatchPolicy, ClLie
from batchbo.gpr import FitConfig, GprModel, Normalizer
from batchbo.loop import STREAMS, IterationRecord, RunConfig, RunHistory, run_bo
from batchbo.metrics import summarize
from batchbo.objectives import (
    GroundTruth,
    NoiseMode,
    NoiseSpec,
    ObjectiveId,
    get_ground_truth,
    gt_projection_grid,
)
from batchbo.sampling import seed_for

log = logging.getLogger(__name__)

ENV_PREFIX = "BATCHBO_"
FAST_SEEDS = 20


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------- configs


def config_to_dict(cfg: RunConfig) -> dict:
    def conv(o):
        if isinstance(o, (ObjectiveId, NoiseMode, AcquisitionKind, BatchMethod, ClLie)):
            return o.value
        if isinstance(o, tuple):
            return [conv(v) for v in o]
        if isinstance(o, dict):
            return {k: conv(v) for k, v in o.items()}
        return o

    return conv(dataclasses.asdict(cfg))


def config_from_dict(d: dict) -> RunConfig:
    fit = dict(d["fit"])
    for k in ("lengthscale_bounds", "amplitude_bounds", "gnv_bounds"):
        fit[k] = tuple(fit[k])
    return RunConfig(
        gt=d["gt"],
        noise=NoiseSpec(**d["noise"]),
        acquisition=AcquisitionSpec(**d["acquisition"]),
        policy=BatchPolicy(**d["policy"]),
        n_init=d["n_init"],
        n_iter=d["n_iter"],
        seed=d["seed"],
        fit=FitConfig(**fit),
        budget=SearchBudget(**d["budget"]),
    )


def cell_id(cfg: RunConfig) -> str:
    acq = cfg.acquisition
    par = f"b{fmt_short(acq.beta)}" if acq.kind is AcquisitionKind.UCB else f"xi{fmt_short(acq.xi)}"
    noise = cfg.noise.mode.value
    if cfg.noise.mode is not NoiseMode.NONE:
        noise += fmt_short(cfg.noise.level)
        if cfg.noise.mode is NoiseMode.KERNEL_AMPLITUDE and cfg.noise.reference_amplitude is not None:
            noise += f"r{fmt_short(cfg.noise.reference_amplitude)}"
    method = cfg.policy.method.value
    if cfg.policy.method is BatchMethod.CL:
        method += cfg.policy.cl_lie.value
    return f"{cfg.gt.value}-{acq.kind.value}-{par}-{method}-q{cfg.policy.q}-{noise}"


def fmt_short(v: float) -> str:
    return ("%g" % v).replace("-", "m")


@dataclass
class SweepConfig:
    base: RunConfig = RunConfig()
    n_seeds: int = 99
    seed_base: int = 0
    noise_levels: Sequence[float] = (0.0,)
    noise_modes: Sequence[str] = ("none",)
    acq_kinds: Sequence[str] = ("ucb",)
    betas: Sequence[float] = (1.0,)
    xis: Sequence[float] = (0.0,)
    batch_methods: Sequence[str] = ("lp",)
    parallel: int = 1

    def cells(self) -> List[Tuple[str, RunConfig]]:
        """Cross product of the sweep axes, each tagged with a stable id."""
        out: Dict[str, RunConfig] = {}
        for mode, level, kind, method in itertools.product(
            self.noise_modes, self.noise_levels, self.acq_kinds, self.batch_methods
        ):
            noise = NoiseSpec(mode, level if mode != "none" else 0.0,
                              self.base.noise.reference_amplitude)
            params = self.betas if AcquisitionKind(kind) is AcquisitionKind.UCB else self.xis
            for p in params:
                acq = AcquisitionSpec(kind, xi=p if kind == "ei" else self.base.acquisition.xi,
                                      beta=p if kind == "ucb" else self.base.acquisition.beta)
                cfg = dataclasses.replace(
                    self.base, noise=noise, acquisition=acq,
                    policy=dataclasses.replace(self.base.policy, method=BatchMethod(method)),
                )
                out.setdefault(cell_id(cfg), cfg)
        return list(out.items())

    def seeds(self) -> List[int]:
        return [seed_for(self.seed_base, k) for k in range(1, self.n_seeds + 1)]


# ---------------------------------------------------------------- running


def run_seeds(cfg: RunConfig, seeds: Sequence[int], parallel: int = 1) -> List[RunHistory]:
    """Run one configuration for several seeds; order follows ``seeds``."""
    configs = [dataclasses.replace(cfg, seed=s) for s in seeds]
    if parallel <= 1 or len(configs) == 1:
        return [run_bo(c) for c in configs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(run_bo, configs))


CURVE_HEADER = (
    ["iter"] + [f"x{i}" for i in range(1, 7)] + ["mu_star", "max_y", "ir_x", "ir_y"]
    + [f"ls{i}" for i in range(1, 7)] + ["amp_sq", "gnv"]
)


def _initial_row(history: RunHistory) -> list:
    nz = history.normalizer
    model = history.model_at(0)
    n = history.n_train_at(0)
    inc = incumbent(model, nz.x_to_unit(history.x[:n]))
    h = history.init_hyper
    x_star = history.x[inc.index]
    return (
        [0] + list(x_star)
        + [float(nz.y_from_unit(inc.mu_star)), float(np.max(history.y[:n])),
           float(np.linalg.norm(inc.x_star - nz.x_to_unit(history.gt.x_max))),
           float(abs(inc.mu_star - nz.y_to_unit(history.gt.y_max)))]
        + list(h["lengthscales"]) + [h["amplitude_sq"], h["gnv"]]
    )


def write_history(history: RunHistory, cell_dir: Path) -> List[Path]:
    cell_dir.mkdir(parents=True, exist_ok=True)
    seed = history.config.seed
    curve = cell_dir / f"seed_{seed}.csv"
    with open(curve, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        if history.init_hyper:
            w.writerow([fmt(v) for v in _initial_row(history)])
        for r in history.records:
            w.writerow([fmt(v) for v in (
                [r.iter] + list(r.incumbent_x) + [r.mu_star, r.max_y, r.ir_x, r.ir_y]
                + list(r.lengthscales) + [r.amplitude_sq, r.gnv]
            )])
    obs = cell_dir / f"seed_{seed}_obs.csv"
    n_init, q = history.config.n_init, history.config.policy.q
    with open(obs, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "iter"] + [f"x{i}" for i in range(1, 7)] + ["y", "y_true"])
        for j in range(len(history.y)):
            it = 0 if j < n_init else (j - n_init) // q + 1
            w.writerow([j, it] + [fmt(v) for v in history.x[j]]
                       + [fmt(history.y[j]), fmt(history.y_true[j])])
    return [curve, obs]


def read_history(cfg: RunConfig, cell_dir: Path) -> RunHistory:
    """Rebuild a :class:`RunHistory` from its per-seed files."""
    seed = cfg.seed
    with open(cell_dir / f"seed_{seed}_obs.csv") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([[float(r[f"x{i}"]) for i in range(1, 7)] for r in rows]).reshape(-1, 6)
    y = np.array([float(r["y"]) for r in rows])
    y_true = np.array([float(r["y_true"]) for r in rows])
    with open(cell_dir / f"seed_{seed}.csv") as fh:
        curve = list(csv.DictReader(fh))
    init_hyper, records = {}, []
    n_init, q = cfg.n_init, cfg.policy.q
    for r in curve:
        it = int(r["iter"])
        ls = np.array([float(r[f"ls{i}"]) for i in range(1, 7)])
        amp, gnv = float(r["amp_sq"]), float(r["gnv"])
        if it == 0:
            init_hyper = {"amplitude_sq": amp, "lengthscales": ls, "gnv": gnv}
            continue
        inc_x = np.array([float(r[f"x{i}"]) for i in range(1, 7)])
        n = n_init + q * it
        matches = np.flatnonzero(np.all(x[:n] == inc_x, axis=1))
        lo, hi = n_init + q * (it - 1), n
        records.append(IterationRecord(
            iter=it, batch_x=x[lo:hi], batch_y=y[lo:hi], incumbent_x=inc_x,
            incumbent_index=int(matches[0]) if len(matches) else -1,
            mu_star=float(r["mu_star"]), max_y=float(r["max_y"]),
            ir_x=float(r["ir_x"]), ir_y=float(r["ir_y"]),
            lengthscales=ls, amplitude_sq=amp, gnv=gnv,
        ))
    return RunHistory(cfg, x, y, y_true, init_hyper, records)


SUMMARY_HEADER = [
    "cell", "n_seeds", "mean_ir_x", "mean_cr_x", "mean_ir_y", "mean_cr_y", "median_ir_x",
    "mean_rmse", "mean_rmse_raw", "mean_sqrt_gnv", "basin_fraction",
    "p25_seed", "p50_seed", "p75_seed",
]


def summary_rows(cells: Dict[str, List[RunHistory]]) -> List[dict]:
    rows = []
    for cid, histories in cells.items():
        complete = [h for h in histories if h.records]
        if not complete:
            rows.append({"cell": cid, "n_seeds": 0})
            continue
        row = summarize(complete).as_row()
        for p in (25, 50, 75):
            key = f"p{p}_seed"
            if key in row:
                row[key] = complete[row[key]].config.seed
        rows.append({"cell": cid, **row})
    return rows


def write_summary(rows: List[dict], path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for row in rows:
            w.writerow([fmt(row.get(k, "")) for k in SUMMARY_HEADER])
    return path


def write_manifest(out: Path, sweep: SweepConfig, cells: List[Tuple[str, RunConfig]],
                   files: List[Path], errors: Dict[str, str]) -> Path:
    manifest = {
        "tool": "batchbo",
        "version": __version__,
        "n_seeds": sweep.n_seeds,
        "seed_base": sweep.seed_base,
        "seeds": sweep.seeds(),
        "streams": {name: f"SeedSequence(seed, spawn_key=({idx},))" for name, idx in STREAMS.items()},
        # a list keeps the cell order stable under sort_keys
        "cells": [{"id": cid, "config": config_to_dict(cfg)} for cid, cfg in cells],
        "errors": errors,
        "files": {str(p.relative_to(out)): file_digest(p) for p in sorted(files)},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def execute_sweep(sweep: SweepConfig, out: Path) -> Tuple[Path, List[dict]]:
    """Run every cell for every seed and write all outputs under ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cells = sweep.cells()
    seeds = sweep.seeds()
    files: List[Path] = []
    results: Dict[str, List[RunHistory]] = {}
    errors: Dict[str, str] = {}
    for cid, cfg in cells:
        log.info("cell %s: %d seeds", cid, len(seeds))
        histories = run_seeds(cfg, seeds, sweep.parallel)
        results[cid] = histories
        for h in histories:
            files.extend(write_history(h, out / cid))
            if h.error:
                errors[f"{cid}/seed_{h.config.seed}"] = h.error
    rows = summary_rows(results) if sweep.base.n_iter > 0 else []
    files.append(write_summary(rows, out / "summary.csv"))
    return write_manifest(out, sweep, cells, files, errors), rows


def manifest_cells(manifest: dict) -> List[Tuple[str, RunConfig]]:
    return [(c["id"], config_from_dict(c["config"])) for c in manifest["cells"]]


def sweep_from_manifest(path: Path, parallel: int = 1) -> SweepConfig:
    m = json.loads(Path(path).read_text())
    cells = manifest_cells(m)
    sweep = _ExplicitSweep(base=cells[0][1], n_seeds=m["n_seeds"], seed_base=m["seed_base"],
                           parallel=parallel)
    sweep.explicit = cells
    return sweep


@dataclass
class _ExplicitSweep(SweepConfig):
    explicit: List[Tuple[str, RunConfig]] = field(default_factory=list)

    def cells(self):
        return list(self.explicit)


def replay(manifest: Path, out: Path, parallel: int = 1) -> Dict[str, bool]:
    """Re-run a manifest into ``out``; map each listed file to digest equality."""
    old = json.loads(Path(manifest).read_text())["files"]
    new_manifest, _ = execute_sweep(sweep_from_manifest(manifest, parallel), out)
    new = json.loads(new_manifest.read_text())["files"]
    return {name: new.get(name) == digest for name, digest in old.items()}


def summarize_dir(out: Path) -> List[dict]:
    """Recompute the summary table from the per-seed files of a run directory."""
    out = Path(out)
    m = json.loads((out / "manifest.json").read_text())
    results = {}
    for cid, base in manifest_cells(m):
        results[cid] = [read_history(dataclasses.replace(base, seed=s), out / cid) for s in m["seeds"]]
    return summary_rows(results)


# ---------------------------------------------------------------- calibration


def calibrate_amplitude(function: str, n_seeds: int = 20, seed_base: int = 0,
                        base: Optional[RunConfig] = None, parallel: int = 1) -> float:
    """Median noiseless kernel amplitude (normalized, not squared) over seeds."""
    if n_seeds < 3:
        raise ValueError("calibration needs at least three seeds")
    base = base or RunConfig()
    cfg = dataclasses.replace(base, gt=ObjectiveId(function), noise=NoiseSpec())
    seeds = [seed_for(seed_base, k) for k in range(1, n_seeds + 1)]
    hist = run_seeds(cfg, seeds, parallel)
    amps = [math.sqrt(h.hyper_at(len(h.records))["amplitude_sq"]) for h in hist]
    return float(np.median(amps))


# ---------------------------------------------------------------- projections


def surrogate_grid(model: GprModel, gt: GroundTruth, pair: Tuple[int, int], resolution: int,
                   x_fixed: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Posterior mean over a pair of dimensions, the others held at ``x_fixed``."""
    a, b = pair
    nz = Normalizer.for_ground_truth(gt)
    axis_a = np.linspace(gt.domain.lower[a], gt.domain.upper[a], resolution)
    axis_b = np.linspace(gt.domain.lower[b], gt.domain.upper[b], resolution)
    pts = np.tile(np.asarray(x_fixed, dtype=float), (resolution * resolution, 1))
    pts[:, a] = np.repeat(axis_a, resolution)
    pts[:, b] = np.tile(axis_b, resolution)
    mean = nz.y_from_unit(model.predict_mean(nz.x_to_unit(pts)))
    return axis_a, axis_b, mean.reshape(resolution, resolution)


def _write_grid(path: Path, pair, axis_a, axis_b, values) -> Path:
    a, b = pair
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{a + 1}", f"x{b + 1}", "value"])
        for i, va in enumerate(axis_a):
            for j, vb in enumerate(axis_b):
                w.writerow([fmt(float(va)), fmt(float(vb)), fmt(float(values[i, j]))])
    return path


def _write_points(path: Path, pair, x: np.ndarray, iters: np.ndarray) -> Path:
    a, b = pair
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "iter", f"x{a + 1}", f"x{b + 1}"])
        for j, (p, it) in enumerate(zip(x, iters)):
            w.writerow([j, int(it), fmt(float(p[a])), fmt(float(p[b]))])
    return path


def emit_projection(source, gt: GroundTruth, pair: Tuple[int, int], resolution: int, out: Path,
                    x_fixed: Optional[np.ndarray] = None, points: Optional[np.ndarray] = None,
                    point_iters: Optional[np.ndarray] = None) -> List[Path]:
    """Write a 2D projection grid (and an optional sampled-point overlay).

    ``source`` is either the ground truth itself (slice maxima over the other
    dimensions) or a fitted model (other dimensions fixed at ``x_fixed``).
    ``pair`` is zero-based.
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(source, GroundTruth):
        axis_a, axis_b, values = gt_projection_grid(source, pair, resolution)
    else:
        if x_fixed is None:
            raise ValueError("surrogate projections need x_fixed")
        axis_a, axis_b, values = surrogate_grid(source, gt, pair, resolution, x_fixed)
    files = [_write_grid(out, pair, axis_a, axis_b, values)]
    if points is not None:
        iters = np.zeros(len(points), dtype=int) if point_iters is None else point_iters
        files.append(_write_points(out.with_name(out.stem + "_points.csv"), pair, points, iters))
    return files


def observation_iters(history: RunHistory) -> np.ndarray:
    n_init, q = history.config.n_init, history.config.policy.q
    j = np.arange(len(history.y))
    return np.where(j < n_init, 0, (j - n_init) // q + 1)


def incumbent_at(history: RunHistory, i: int) -> np.ndarray:
    if i > 0:
        return history.records[i - 1].incumbent_x
    n = history.n_train_at(0)
    model = history.model_at(0)
    return history.x[incumbent(model, history.normalizer.x_to_unit(history.x[:n])).index]


def emit_frames(history: RunHistory, pair: Tuple[int, int], resolution: int, out_dir: Path,
                iterations: Optional[Iterable[int]] = None) -> List[Path]:
    """One surrogate grid (plus point overlay) per selected iteration."""
    out_dir = Path(out_dir)
    its = list(range(len(history.records) + 1)) if iterations is None else list(iterations)
    files = []
    all_iters = observation_iters(history)
    for i in its:
        n = history.n_train_at(i)
        files.extend(emit_projection(
            history.model_at(i), history.gt, pair, resolution, out_dir / f"frame_{i:03d}.csv",
            x_fixed=incumbent_at(history, i), points=history.x[:n], point_iters=all_iters[:n],
        ))
    return files


# ---------------------------------------------------------------- CLI


def _floats(s: str) -> List[float]:
    return [float(v) for v in str(s).split(",") if v.strip()]


def _strs(s: str) -> List[str]:
    return [v.strip().lower() for v in str(s).split(",") if v.strip()]


def _pair(s: str) -> Tuple[int, int]:
    a, b = (int(v) for v in s.split(","))
    if a == b or min(a, b) < 1 or max(a, b) > 6:
        raise argparse.ArgumentTypeError("pair must be two distinct 1-based dimensions")
    return a - 1, b - 1


def _choice_list(choices):
    def parse(s):
        vals = _strs(s)
        bad = [v for v in vals if v not in choices]
        if bad or not vals:
            raise argparse.ArgumentTypeError(f"invalid choice {bad or s!r}; choose from {sorted(choices)}")
        return vals
    return parse


def _add_common(p: argparse.ArgumentParser, lists: bool) -> None:
    many = (lambda parse: parse) if lists else (lambda parse: (lambda s: _single(parse(s))))
    p.add_argument("--function", choices=["ackley", "hartmann"], default="ackley")
    p.add_argument("--acq", type=many(_choice_list({"ucb", "ei"})), default=["ucb"])
    p.add_argument("--beta", type=many(_floats), default=[1.0])
    p.add_argument("--xi", type=many(_floats), default=[0.0])
    p.add_argument("--batch", type=many(_choice_list({"lp", "kb", "cl"})), default=["lp"])
    p.add_argument("--cl-lie", choices=["min", "max", "mean"], default="min")
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--init", type=int, default=24)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--noise-mode", type=many(_choice_list({"none", "gtmax", "kernel"})), default=["none"])
    p.add_argument("--noise-level", type=many(_floats), default=[0.0])
    p.add_argument("--ref-amplitude", type=float, default=None)
    p.add_argument("--out", type=Path, default=Path("bench_out"))
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--fast", action="store_true", help=f"use {FAST_SEEDS} seeds unless --seeds is given")
    p.add_argument("--replay", type=Path, default=None, help="re-run the given manifest.json")


def _single(vals):
    if len(vals) != 1:
        raise argparse.ArgumentTypeError("`run` takes a single value; use `sweep` for lists")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="batchbo", description="Batch Bayesian-optimization benchmark harness")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="one configuration over several seeds"), lists=False)
    _add_common(sub.add_parser("sweep", help="cross product of comma-separated axes"), lists=True)

    cal = sub.add_parser("calibrate", help="median noiseless kernel amplitude")
    cal.add_argument("--function", choices=["ackley", "hartmann"], default="ackley")
    cal.add_argument("--seeds", type=int, default=None)
    cal.add_argument("--seed-base", type=int, default=0)
    cal.add_argument("--iters", type=int, default=50)
    cal.add_argument("--parallel", type=int, default=1)
    cal.add_argument("--fast", action="store_true")
    cal.add_argument("--out", type=Path, default=None)

    proj = sub.add_parser("project", help="2D projection grid of the ground truth or a run's surrogate")
    proj.add_argument("--function", choices=["ackley", "hartmann"], default="ackley")
    proj.add_argument("--pair", type=_pair, default=(0, 1))
    proj.add_argument("--resolution", type=int, default=41)
    proj.add_argument("--run-dir", type=Path, default=None)
    proj.add_argument("--cell", default=None)
    proj.add_argument("--seed", type=int, default=None)
    proj.add_argument("--iter", type=int, default=None)
    proj.add_argument("--out", type=Path, default=Path("projection.csv"))

    fr = sub.add_parser("frames", help="per-iteration surrogate grids for animation")
    fr.add_argument("--run-dir", type=Path, required=True)
    fr.add_argument("--cell", default=None)
    fr.add_argument("--seed", type=int, default=None)
    fr.add_argument("--pair", type=_pair, default=(0, 1))
    fr.add_argument("--resolution", type=int, default=41)
    fr.add_argument("--frame-iters", type=_floats, default=None, help="comma-separated iterations")
    fr.add_argument("--out", type=Path, default=Path("frames"))

    sm = sub.add_parser("summarize", help="recompute summary.csv from per-seed files")
    sm.add_argument("--out", type=Path, required=True)
    sm.add_argument("--write", type=Path, default=None)
    return parser


def _env_defaults(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    """Apply ``BATCHBO_<FLAG>`` environment overrides as parser defaults."""
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    for sp in sub_actions:
        for sub in sp.choices.values():
            for action in sub._actions:
                if not action.option_strings or action.dest == "help":
                    continue
                name = ENV_PREFIX + action.option_strings[-1].lstrip("-").replace("-", "_").upper()
                if name not in os.environ:
                    continue
                raw = os.environ[name]
                if action.nargs == 0:
                    sub.set_defaults(**{action.dest: raw.lower() in ("1", "true", "yes")})
                else:
                    val = action.type(raw) if action.type else raw
                    if action.choices is not None and val not in action.choices:
                        raise SystemExit(f"{name}: invalid value {raw!r}")
                    sub.set_defaults(**{action.dest: val})


def sweep_from_args(args) -> SweepConfig:
    n_seeds = args.seeds if args.seeds is not None else (FAST_SEEDS if args.fast else 99)
    base = RunConfig(
        gt=args.function,
        noise=NoiseSpec(reference_amplitude=args.ref_amplitude),
        policy=BatchPolicy(q=args.batch_size, cl_lie=args.cl_lie),
        n_init=args.init,
        n_iter=args.iters,
    )
    return SweepConfig(
        base=base, n_seeds=n_seeds, seed_base=args.seed_base,
        noise_levels=args.noise_level, noise_modes=args.noise_mode, acq_kinds=args.acq,
        betas=args.beta, xis=args.xi, batch_methods=args.batch, parallel=args.parallel,
    )


def _pick_history(run_dir: Path, cell: Optional[str], seed: Optional[int]) -> RunHistory:
    m = json.loads((run_dir / "manifest.json").read_text())
    cells = dict(manifest_cells(m))
    cid = cell or next(iter(cells))
    base = cells[cid]
    if seed is None:
        # median seed by final regret when not specified
        summary = {r["cell"]: r for r in csv.DictReader(open(run_dir / "summary.csv"))}
        seed = int(summary[cid]["p50_seed"]) if summary.get(cid, {}).get("p50_seed") else m["seeds"][0]
    return read_history(dataclasses.replace(base, seed=seed), run_dir / cid)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _env_defaults(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (OSError, ValueError) as exc:
        print(f"batchbo: error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command in ("run", "sweep"):
        out = Path(args.out)
        _check_writable(out)
        if args.replay is not None:
            same = replay(args.replay, out, args.parallel)
            bad = [k for k, ok in same.items() if not ok]
            for k in bad:
                print(f"digest mismatch: {k}")
            print(f"replayed {len(same)} files, {len(same) - len(bad)} identical")
            return 0 if not bad else 3
        sweep = sweep_from_args(args)
        manifest, rows = execute_sweep(sweep, out)
        for row in rows:
            print(f"{row['cell']}: <IR(X)>={row.get('mean_ir_x', float('nan')):.4g} "
                  f"<IR(y)>={row.get('mean_ir_y', float('nan')):.4g}")
        print(f"wrote {manifest}")
        errors = json.loads(manifest.read_text())["errors"]
        return 4 if errors else 0
    if args.command == "calibrate":
        n = args.seeds if args.seeds is not None else (FAST_SEEDS if args.fast else 99)
        amp = calibrate_amplitude(args.function, n, args.seed_base,
                                  RunConfig(n_iter=args.iters), args.parallel)
        print(fmt(amp))
        if args.out is not None:
            Path(args.out).write_text(json.dumps({"function": args.function, "n_seeds": n,
                                                  "reference_amplitude": amp}, indent=2) + "\n")
        return 0
    if args.command == "project":
        if args.run_dir is None:
            gt = get_ground_truth(args.function)
            emit_projection(gt, gt, args.pair, args.resolution, args.out)
        else:
            h = _pick_history(args.run_dir, args.cell, args.seed)
            i = len(h.records) if args.iter is None else args.iter
            n = h.n_train_at(i)
            emit_projection(h.model_at(i), h.gt, args.pair, args.resolution, args.out,
                            x_fixed=incumbent_at(h, i), points=h.x[:n],
                            point_iters=observation_iters(h)[:n])
        print(f"wrote {args.out}")
        return 0
    if args.command == "frames":
        h = _pick_history(args.run_dir, args.cell, args.seed)
        its = None if args.frame_iters is None else [int(v) for v in args.frame_iters]
        files = emit_frames(h, args.pair, args.resolution, args.out, its)
        print(f"wrote {len(files)} files to {args.out}")
        return 0
    if args.command == "summarize":
        rows = summarize_dir(args.out)
        target = args.write or (Path(args.out) / "summary_recomputed.csv")
        write_summary(rows, target)
        print(f"wrote {target}")
        return 0
    return 2


def _check_writable(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")


if __name__ == "__main__":
    raise SystemExit(main())
