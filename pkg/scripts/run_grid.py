"""Convergence table for bigd-practical over the benchmark problems.

    python scripts/run_grid.py --dims 25,50 --out runs/grid
"""

import argparse

from bigd.bench import BenchConfig, run_benchmark
from bigd.problems import PROBLEMS


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--problems", default=",".join(PROBLEMS))
    ap.add_argument("--dims", default="25,50")
    ap.add_argument("--algos", default="bigd-practical")
    ap.add_argument("--init", default="preset", choices=("preset", "random"))
    ap.add_argument("--seeds", default="0")
    ap.add_argument("--time-limit", type=float, default=300.0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="runs/grid")
    a = ap.parse_args()
    cfg = BenchConfig(
        a.problems.split(","), [int(d) for d in a.dims.split(",")], a.algos.split(","), a.init,
        [int(s) for s in a.seeds.split(",")], a.time_limit, a.out, trace_every=1, jobs=a.jobs,
    )
    rows = run_benchmark(cfg, log=print)
    print(f"\n{'problem':22s} {'n':>4s} {'algo':15s} {'status':16s} {'time':>8s} {'iter':>7s} {'gap':>10s}")
    for r in rows:
        print(f"{r.problem:22s} {r.dim:4d} {r.algorithm:15s} {r.status:16s} {r.time_s:8.2f} {r.iterations:7d} {r.gap:10.2e}")


if __name__ == "__main__":
    main()
