"""Command-line harness: ``simulate``, ``estimate`` and ``sweep``.

Sweep output is a long-format CSV with one row per
(alpha, n, replicate, policy); see README for the column meanings and the
config schema.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as mio
from .embedding import procrustes_align, spectral_embed
from .errors import ConfigError, ConvergenceError, DegenerateInputError, MmspecError
from .estimation import (
    ShrinkPolicy,
    alpha_error,
    estimate,
    finish,
    fit_geometry,
    match_permutation,
    pi_max_error,
    vertex_error,
)
from .model import DEFAULT_B, ModelSpec, sample_mmsbm, true_vertices

log = logging.getLogger("mmspec")

SWEEP_COLUMNS = [
    "alpha", "n", "replicate", "seed", "policy", "eta",
    "B_error", "vertex_error", "alpha_error", "pi_max_error", "runtime", "error",
]
DEFAULT_POLICIES = ["none", "fixed:0.9", "rate"]
DEFAULT_N_GRID = [100, 500, 1000, 5000, 10000]


@dataclass
class ExperimentConfig:
    """Validated experiment configuration (see README for the JSON schema)."""

    B: np.ndarray
    alphas: list
    n: int = 1000
    n_grid: list = field(default_factory=lambda: list(DEFAULT_N_GRID))
    replicates: int = 100
    policies: list = field(default_factory=lambda: list(DEFAULT_POLICIES))
    seed: int = 0
    out: str | None = None
    d: int | None = None

    def spec(self, alpha_index=0) -> ModelSpec:
        return ModelSpec(self.B, self.alphas[alpha_index], self.d)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("top level must be a JSON object")
        known = {"model", "n", "n_grid", "replicates", "policies", "seed", "out"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown keys {sorted(extra)}", field=sorted(extra)[0])
        model = data.get("model", {})
        if not isinstance(model, dict):
            raise ConfigError("must be an object", field="model")
        b = np.asarray(model.get("B", DEFAULT_B), dtype=float)
        alphas = model.get("alphas")
        if alphas is None:
            alphas = [model.get("alpha", [1.0] * b.shape[0])]
        if not isinstance(alphas, list) or not alphas:
            raise ConfigError("must be a non-empty list of vectors", field="model.alphas")
        d = model.get("d")
        cfg = cls(B=b, alphas=[list(map(float, a)) for a in alphas], d=d)
        if "k" in model and int(model["k"]) != b.shape[0]:
            raise ConfigError(f"k={model['k']} but B is {b.shape[0]}x{b.shape[0]}", field="model.k")
        for i in range(len(cfg.alphas)):
            try:
                cfg.spec(i)
            except MmspecError as exc:
                raise ConfigError(str(exc), field="model") from exc
        if "n" in data:
            cfg.n = _int_field(data["n"], "n", minimum=2)
        if "n_grid" in data:
            grid = data["n_grid"]
            if not isinstance(grid, list) or not grid:
                raise ConfigError("must be a non-empty list", field="n_grid")
            grid = [_int_field(v, "n_grid", minimum=2) for v in grid]
            if any(b2 <= a2 for a2, b2 in zip(grid, grid[1:])):
                raise ConfigError("must be strictly increasing", field="n_grid")
            cfg.n_grid = grid
        if "replicates" in data:
            cfg.replicates = _int_field(data["replicates"], "replicates", minimum=1)
        if "policies" in data:
            pols = data["policies"]
            if not isinstance(pols, list) or not pols:
                raise ConfigError("must be a non-empty list", field="policies")
            try:
                cfg.policies = [str(ShrinkPolicy.parse(p)) for p in pols]
            except MmspecError as exc:
                raise ConfigError(str(exc), field="policies") from exc
        if "seed" in data:
            cfg.seed = _int_field(data["seed"], "seed", minimum=0)
        cfg.out = data.get("out")
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
        return cls.from_dict(data)


def _int_field(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", field=name)
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", field=name)
    return value


# ----------------------------------------------------------------------------
# commands


def cmd_simulate(config: ExperimentConfig, out_dir, n=None, seed=None):
    """Sample one graph and write ``graph.txt``, ``pi.csv``, ``x.csv``, ``model.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = config.n if n is None else n
    seed = config.seed if seed is None else seed
    spec = config.spec(0)
    g = sample_mmsbm(spec, n, np.random.default_rng(seed))
    mio.write_edge_list(out_dir / "graph.txt", g)
    mio.write_matrix_csv(out_dir / "pi.csv", g.truth.pi)
    mio.write_matrix_csv(out_dir / "x.csv", g.truth.x)
    meta = {"model": spec.to_dict(), "n": n, "seed": seed}
    mio.write_json(out_dir / "model.json", meta)
    return g


def cmd_estimate(graph_path, k, d, policy="none", out=None, method="auto"):
    """Estimate from an edge-list file; returns the result and writes JSON to ``out``."""
    g = mio.read_edge_list(graph_path)
    res = estimate(g, k, d, policy=policy, method=method)
    if out is not None:
        mio.write_json(out, res.to_dict())
    return res


def _sweep_task(task):
    """All policies for one (alpha, n, replicate); graph shared across policies."""
    b, alpha, a_idx, n, rep, seed, policies, d = task
    spec = ModelSpec(b, alpha, d)
    rows = []
    base = {
        "alpha": ";".join(mio.format_float(a) for a in alpha),
        "n": n,
        "replicate": rep,
        "seed": seed,
    }
    t0 = time.perf_counter()
    try:
        g = sample_mmsbm(spec, n, np.random.default_rng([seed, n, a_idx]))
        geom = fit_geometry(spectral_embed(g, spec.d), spec.k, spec.d)
        w, _ = procrustes_align(geom.xhat, g.truth.x)
        v_true = true_vertices(spec)
    except (MmspecError, np.linalg.LinAlgError) as exc:
        for p in policies:
            rows.append({**base, "policy": p, "error": f"{type(exc).__name__}: {exc}"})
        return rows
    shared = time.perf_counter() - t0
    for p in policies:
        t1 = time.perf_counter()
        row = {**base, "policy": p}
        try:
            res = finish(geom, p)
            row["eta"] = res.eta
            row["B_error"] = match_permutation(res.b_hat, spec.B).error
            if res.s_hat.vertices.shape == v_true.shape:
                row["vertex_error"] = vertex_error(res.s_hat.vertices @ w, v_true)
            if res.alpha_hat is not None:
                row["alpha_error"] = alpha_error(res.alpha_hat, spec.alpha)
            if res.pi_hat is not None:
                row["pi_max_error"] = pi_max_error(res.pi_hat, g.truth.pi)
        except (MmspecError, np.linalg.LinAlgError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        row["runtime"] = shared + time.perf_counter() - t1
        rows.append(row)
    return rows


def sweep_tasks(config: ExperimentConfig, seed=None):
    base_seed = config.seed if seed is None else seed
    for a_idx, alpha in enumerate(config.alphas):
        for n in config.n_grid:
            for rep in range(config.replicates):
                yield (config.B, alpha, a_idx, n, rep, base_seed + rep, config.policies, config.d)


def _format_row(row):
    out = []
    for col in SWEEP_COLUMNS:
        v = row.get(col)
        if v is None:
            out.append("" if col == "error" else "nan")
        elif isinstance(v, float):
            out.append(mio.format_float(v))
        else:
            out.append(str(v))
    return out


def cmd_sweep(config: ExperimentConfig, out, jobs=1, seed=None):
    """Run the replicate grid and write the long-format CSV to ``out``.

    Rows are written in deterministic (alpha, n, replicate, policy) order
    regardless of ``jobs``. Returns the rows as dicts.
    """
    tasks = list(sweep_tasks(config, seed))
    rows = []
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = pool.map(_sweep_task, tasks)
                for task_rows in results:
                    for row in task_rows:
                        writer.writerow(_format_row(row))
                        rows.append(row)
        else:
            for task in tasks:
                for row in _sweep_task(task):
                    writer.writerow(_format_row(row))
                    rows.append(row)
                log.info("n=%d replicate=%d done", task[3], task[4])
    return rows


def read_sweep_csv(path):
    """Parse a sweep CSV back into typed rows."""
    ints = {"n", "replicate", "seed"}
    strs = {"alpha", "policy", "error"}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for col in SWEEP_COLUMNS:
                v = rec[col]
                if col in ints:
                    row[col] = int(v)
                elif col in strs:
                    row[col] = v
                else:
                    row[col] = float(v)
            rows.append(row)
    return rows


# ----------------------------------------------------------------------------
# entry point


def _build_parser():
    p = argparse.ArgumentParser(prog="mmspec", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    # also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="sample a graph and its ground truth")
    s.add_argument("--config", help="experiment config JSON (defaults: three-community model)")
    s.add_argument("--n", type=int, help="node count (overrides config)")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="output directory")

    e = sub.add_parser("estimate", parents=[common],
                       help="estimate B, memberships and alpha from an edge list")
    e.add_argument("graph", help="edge-list file")
    e.add_argument("--config", help="take k and d from this config's model")
    e.add_argument("--k", type=int)
    e.add_argument("--d", type=int)
    e.add_argument("--policy", default="none", help="none | fixed:<eta> | rate[:<a>]")
    e.add_argument("--method", default="auto", choices=["auto", "dense", "iterative"])
    e.add_argument("--out", help="result JSON path (default: stdout)")

    w = sub.add_parser("sweep", parents=[common],
                       help="run a simulation grid and write a long-format CSV")
    w.add_argument("--config", help="experiment config JSON")
    w.add_argument("--seed", type=int, help="base seed (overrides config)")
    w.add_argument("--out", help="CSV path (overrides config)")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--policy", action="append", help="repeatable; overrides config policies")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.from_dict({})
        if args.command == "simulate":
            g = cmd_simulate(config, args.out, n=args.n, seed=args.seed)
            log.info("wrote %d edges on %d nodes to %s", g.n_edges, g.n, args.out)
        elif args.command == "estimate":
            k = args.k if args.k is not None else (config.spec().k if args.config else None)
            d = args.d if args.d is not None else (config.spec().d if args.config else None)
            if k is None or d is None:
                raise ConfigError("--k and --d are required without --config")
            res = cmd_estimate(args.graph, k, d, args.policy, out=args.out, method=args.method)
            if args.out is None:
                json.dump(res.to_dict(), sys.stdout, indent=1)
                sys.stdout.write("\n")
        else:
            if args.policy:
                config.policies = [str(ShrinkPolicy.parse(p)) for p in args.policy]
            out = args.out or config.out
            if out is None:
                raise ConfigError("no output path: pass --out or set 'out'", field="out")
            rows = cmd_sweep(config, out, jobs=args.jobs, seed=args.seed)
            failed = sum(1 for r in rows if r.get("error"))
            if failed:
                log.warning("%d of %d rows carry errors", failed, len(rows))
    except (ConvergenceError, DegenerateInputError, np.linalg.LinAlgError) as exc:
        print(f"mmspec: numeric error: {exc}", file=sys.stderr)
        return 3
    except (MmspecError, OSError) as exc:
        print(f"mmspec: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
