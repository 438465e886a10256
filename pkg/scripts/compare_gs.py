"""Per-iteration cost breakdown of bigd-practical against gradient sampling.

Reports iterations, function/gradient evaluations, QP time and the mean QP
input size for matched starting points and seeds.

    python scripts/compare_gs.py --problem Chained_CB3_II --dim 50 --seeds 1,2,3
"""

import argparse

import numpy as np

from bigd.baselines import GsConfig, solve_gs
from bigd.bigd import PracticalConfig, solve_practical
from bigd.problems import initial_point, make_problem


def summary(tag, run, f_star):
    it = max(run.iterations, 1)
    qp_in = np.mean([t.n_effective for t in run.trace]) if run.trace else 0.0
    return (f"{tag:15s} {str(run.status):14s} gap={run.final_value - f_star:9.2e} it={run.iterations:6d} "
            f"fe={run.func_evals:8d} ge={run.grad_evals:8d} qp={run.qp_time:7.3f}s "
            f"t/it={run.wall_time / it * 1e3:7.2f}ms |QP|={qp_in:6.1f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--problem", default="Chained_CB3_II")
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--seeds", default="1,2,3")
    ap.add_argument("--time-limit", type=float, default=60.0)
    a = ap.parse_args()
    f, spec = make_problem(a.problem, a.dim)
    for seed in (int(s) for s in a.seeds.split(",")):
        x0 = initial_point(a.problem, a.dim, "random", seed)
        print(f"seed {seed}")
        print("  " + summary("bigd-practical", solve_practical(f, x0, PracticalConfig(time_limit=a.time_limit)), spec.f_star))
        print("  " + summary("gs", solve_gs(f, x0, GsConfig(seed=seed, time_limit=a.time_limit)), spec.f_star))


if __name__ == "__main__":
    main()
