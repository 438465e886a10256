"""Least-squares slope of log10(f - f*) over the last iterations of EBIGD.

    python scripts/ebigd_tail.py --alphas 0.05,0.2,0.5
"""

import argparse

import numpy as np

from bigd.ebigd import EbigdConfig, solve_ebigd
from bigd.problems import initial_point, make_problem


def slope(run, f_star, tail):
    g = np.array([t.f for t in run.trace] + [run.final_value]) - f_star
    g = g[g > 0][-tail:]
    if g.size < 2:
        return float("nan"), g.size
    return float(np.polyfit(np.arange(g.size), np.log10(g), 1)[0]), g.size


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=10)
    ap.add_argument("--alphas", default="0.05,0.2,0.5")
    ap.add_argument("--tail", type=int, default=50)
    a = ap.parse_args()
    n = a.dim
    starts = {"gen_MAXQ": np.ones(n), "Chained_CB3_II": initial_point("Chained_CB3_II", n)}
    for alpha in (float(s) for s in a.alphas.split(",")):
        for name, x0 in starts.items():
            f, spec = make_problem(name, n)
            run = solve_ebigd(f, x0, EbigdConfig(alpha=alpha, f_target=spec.f_star + 1e-9, time_limit=120))
            s, m = slope(run, spec.f_star, a.tail)
            print(f"alpha={alpha:<5g} {name:16s} {str(run.status):14s} it={run.iterations:6d} "
                  f"gap={run.final_value - spec.f_star:9.2e} slope={s:8.4f} ({m} pts) {run.diagnostic}")
    print("gen_MAXQ from a tied start contracts by (1 - 2 alpha / n)^2 per iteration:")
    for alpha in (float(s) for s in a.alphas.split(",")):
        print(f"  alpha={alpha:<5g} predicted slope {2 * np.log10(1 - 2 * alpha / n):8.4f}")


if __name__ == "__main__":
    main()
