"""Benchmark harness: problem x dimension x algorithm x seed grids.

Writes ``results.csv`` (one row per run), ``config.json`` (the exact grid
configuration) and per-run trace CSVs under ``traces/``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .baselines import GsConfig, solve_gs
from .bigd import BigdConfig, PracticalConfig, solve_bigd, solve_practical
from .ebigd import EbigdConfig, solve_ebigd
from .problems import PROBLEMS, initial_point, make_problem
from .runs import SolverRun

ALGORITHMS = ("bigd", "bigd-practical", "ebigd", "gs")
OUT_ENV = "BIGD_BENCH_OUT"
DEFAULT_OUT = "bench_out"
DEFAULT_TIME_LIMIT = 300.0
FAILED = "Failed"

RESULT_COLUMNS = (
    "problem", "dim", "algorithm", "seed", "status", "time_s", "iterations",
    "final_obj", "gap", "func_evals", "grad_evals", "qp_time_s", "eval_time_s",
)
TRACE_COLUMNS = (
    "iter", "wall_s", "f", "gap", "d_norm", "n_effective_branches",
    "n_visited_branches", "func_evals_cum", "grad_evals_cum",
)
TIMING_COLUMNS = ("time_s", "qp_time_s", "eval_time_s")


@dataclass
class BenchConfig:
    problems: list[str]
    dims: list[int]
    algorithms: list[str]
    init: str = "preset"
    seeds: list[int] = field(default_factory=lambda: [0])
    time_limit_s: float = DEFAULT_TIME_LIMIT
    out_dir: str | None = None
    trace_every: int = 1  # 0 disables trace files
    jobs: int = 1

    def __post_init__(self):
        if not self.problems or not self.dims or not self.algorithms or not self.seeds:
            raise ValueError("problems, dims, algorithms and seeds must be nonempty")
        bad = [p for p in self.problems if p not in PROBLEMS]
        if bad:
            raise ValueError(f"unknown problems: {bad}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms: {bad}; choose from {ALGORITHMS}")
        if self.init not in ("preset", "random"):
            raise ValueError("init must be 'preset' or 'random'")
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        if not self.time_limit_s > 0:
            raise ValueError("time limit must be positive")
        if self.trace_every < 0 or self.jobs < 1:
            raise ValueError("trace_every must be >= 0 and jobs >= 1")

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)

    def grid(self):
        """Runs in grid order: problem, dim, algorithm, seed."""
        for p in self.problems:
            for n in self.dims:
                for a in self.algorithms:
                    for s in self.seeds:
                        yield p, n, a, s


@dataclass
class ResultRow:
    problem: str
    dim: int
    algorithm: str
    seed: int
    status: str
    time_s: float
    iterations: int
    final_obj: float
    gap: float
    func_evals: int
    grad_evals: int
    qp_time_s: float
    eval_time_s: float

    def non_timing(self) -> tuple:
        return tuple(getattr(self, c) for c in RESULT_COLUMNS if c not in TIMING_COLUMNS)


assert tuple(f.name for f in fields(ResultRow)) == RESULT_COLUMNS


def run_solver(algorithm: str, f, x0, time_limit: float | None, seed: int = 0) -> SolverRun:
    if algorithm == "bigd":
        return solve_bigd(f, x0, BigdConfig(time_limit=time_limit))
    if algorithm == "bigd-practical":
        return solve_practical(f, x0, PracticalConfig(time_limit=time_limit))
    if algorithm == "ebigd":
        return solve_ebigd(f, x0, EbigdConfig(time_limit=time_limit))
    if algorithm == "gs":
        return solve_gs(f, x0, GsConfig(seed=seed, time_limit=time_limit))
    raise ValueError(f"unknown algorithm {algorithm!r}")


def trace_name(problem, n, algorithm, init, seed) -> str:
    return f"{problem}_n{n}_{algorithm}_{init}_s{seed}.csv"


def emit_trace(run: SolverRun, path, f_star: float = 0.0, every: int = 1) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    every = max(1, every)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        last = len(run.trace) - 1
        for i, r in enumerate(run.trace):
            if i % every and i != last:
                continue
            w.writerow([r.iter, repr(r.wall_s), repr(r.f), repr(r.f - f_star), repr(r.d_norm),
                        r.n_effective, r.n_visited, r.func_evals, r.grad_evals])
    return path


def _one(task):
    problem, n, algorithm, seed, init, time_limit, trace_dir, every = task
    try:
        f, spec = make_problem(problem, n)
        x0 = initial_point(problem, n, init, seed)
        run = run_solver(algorithm, f, x0, time_limit, seed)
    except Exception as exc:  # recorded, never aborts the grid
        nan = float("nan")
        msg = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        return ResultRow(problem, n, algorithm, seed, FAILED, 0.0, 0, nan, nan, 0, 0, 0.0, 0.0), msg
    if trace_dir is not None:
        emit_trace(run, Path(trace_dir) / trace_name(problem, n, algorithm, init, seed), spec.f_star, every)
    row = ResultRow(
        problem, n, algorithm, seed, str(run.status), run.wall_time, run.iterations,
        run.final_value, run.final_value - spec.f_star, run.func_evals, run.grad_evals,
        run.qp_time, run.eval_time,
    )
    return row, run.diagnostic


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def write_results(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in RESULT_COLUMNS])
    return path


def read_results(path) -> list[ResultRow]:
    conv = {f.name: f.type for f in fields(ResultRow)}
    cast = {"int": int, "float": float, "str": str}
    with Path(path).open(newline="") as fh:
        return [ResultRow(**{k: cast[conv[k]](v) for k, v in rec.items()}) for rec in csv.DictReader(fh)]


def run_benchmark(cfg: BenchConfig, log=None) -> list[ResultRow]:
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    trace_dir = str(out / "traces") if cfg.trace_every else None
    tasks = [(p, n, a, s, cfg.init, cfg.time_limit_s, trace_dir, cfg.trace_every) for p, n, a, s in cfg.grid()]
    with (out / "config.json").open("w") as fh:
        json.dump(asdict(cfg) | {"out_dir": str(out)}, fh, indent=2)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            done = list(ex.map(_one, tasks))  # map preserves grid order
    else:
        done = []
        for t in tasks:
            done.append(_one(t))
            if log:
                r, msg = done[-1]
                log(f"{r.problem} n={r.dim} {r.algorithm} seed={r.seed}: {r.status} gap={r.gap:.3e} t={r.time_s:.2f}s"
                    + (f" ({msg})" if msg else ""))
    rows = [r for r, _ in done]
    write_results(rows, out / "results.csv")
    return rows


def _csv(type_):
    def parse(s: str):
        items = [t.strip() for t in s.split(",") if t.strip()]
        return [type_(t) for t in items]
    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description="Run solver benchmark grids.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--init", choices=("preset", "random"), default="preset")
        p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    r = sub.add_parser("run", help="run a full grid")
    r.add_argument("--problems", type=_csv(str), required=True)
    r.add_argument("--dims", type=_csv(int), required=True)
    r.add_argument("--algos", type=_csv(str), required=True)
    r.add_argument("--seeds", type=_csv(int), default=[0])
    r.add_argument("--trace-every", type=int, default=1, help="keep every k-th trace row, 0 for no traces")
    r.add_argument("--jobs", type=int, default=1)
    common(r)

    t = sub.add_parser("trace", help="single run with a full trace")
    t.add_argument("--problem", required=True)
    t.add_argument("--dim", type=int, required=True)
    t.add_argument("--algo", required=True)
    t.add_argument("--seed", type=int, default=0)
    common(t)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            cfg = BenchConfig(args.problems, args.dims, args.algos, args.init, args.seeds,
                              args.time_limit, args.out, args.trace_every, args.jobs)
        else:
            cfg = BenchConfig([args.problem], [args.dim], [args.algo], args.init, [args.seed],
                              args.time_limit, args.out, 1, 1)
    except ValueError as exc:
        print(f"bench: config error: {exc}", file=sys.stderr)
        return 2
    try:
        rows = run_benchmark(cfg, log=lambda m: print(m, file=sys.stderr))
    except OSError as exc:
        print(f"bench: {exc}", file=sys.stderr)
        return 1
    print(cfg.out_path / "results.csv")
    return 1 if any(r.status == FAILED for r in rows) else 0


if __name__ == "__main__":
    sys.exit(main())
