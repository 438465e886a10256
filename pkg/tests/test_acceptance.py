"""Acceptance criteria, each run at its stated tolerance.

Every test appends one PASS/FAIL line that is printed in the pytest
terminal summary under "acceptance criteria".
"""

import math

import numpy as np
import pytest

from bigd.baselines import GsConfig, solve_gs
from bigd.bigd import PracticalConfig, solve_practical, stationarity_certificate
from bigd.ebigd import EbigdConfig, solve_ebigd, solve_quartic_recovery
from bigd.encoding import TAU_ACT, DomainError
from bigd.minnorm import min_norm_point
from bigd.problems import PROBLEMS, fixtures, initial_point, make_problem
from conftest import ACCEPTANCE_LINES, fd_gradient
from oracles import recovery_grid, simplex_grid_min_norm

CONVEX_SET = ["gen_MAXQ", "gen_MXHILB", "Chained_LQ", "Chained_CB3_I", "Chained_CB3_II"]
NONCONVEX_SET = ["Chained_Crescent_I", "Chained_Crescent_II", "brown_func2", "num_active_faces"]
STARTS = [("preset", None), ("random", 1), ("random", 2), ("random", 3)]
BUDGET = 60.0
NU_OPT = PracticalConfig().nu_opt


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def grid_cases():
    for name in CONVEX_SET:
        for n in (25, 50):
            for mode, seed in STARTS:
                yield (name, n, mode, seed)
    for name in NONCONVEX_SET:
        yield (name, 25, "preset", None)


def run_grid():
    out = {}
    for case in grid_cases():
        name, n, mode, seed = case
        f, spec = make_problem(name, n)
        x0 = initial_point(name, n, mode, seed)
        out[case] = (f, spec, solve_practical(f, x0, PracticalConfig(time_limit=BUDGET)))
    return out


def fingerprint(run):
    """Every non-timing output of a run."""
    trace = tuple((t.iter, t.f, t.d_norm, t.n_effective, t.n_visited, t.func_evals, t.grad_evals) for t in run.trace)
    return (str(run.status), run.iterations, run.final_value, run.final_point.tobytes(),
            run.func_evals, run.grad_evals, run.diagnostic, trace)


@pytest.fixture(scope="module")
def grid():
    return run_grid()


def test_criterion_1_convex_convergence(grid):
    bad, worst = [], 0.0
    for (name, n, mode, seed), (f, spec, run) in grid.items():
        if name not in CONVEX_SET:
            continue
        g = run.final_value - spec.f_star
        worst = max(worst, g)
        if not (g <= 1e-4 and g >= -1e-9 and run.wall_time <= BUDGET):
            bad.append(f"{name} n={n} {mode}/{seed}: {run.status} gap={g:.2e} t={run.wall_time:.1f}s")
    slowest = max(r.wall_time for (nm, *_), (_, _, r) in grid.items() if nm in CONVEX_SET)
    report(1, not bad, f"40 runs, worst gap {worst:.2e}, slowest {slowest:.1f}s" + (f"; failures: {bad}" if bad else ""))
    assert not bad


def test_criterion_2_nonconvex_convergence(grid):
    bad, parts = [], []
    for (name, n, mode, seed), (f, spec, run) in grid.items():
        if name not in NONCONVEX_SET:
            continue
        g = run.final_value - spec.f_star
        parts.append(f"{name}={g:.1e}")
        if not (g <= 1e-3 and run.wall_time <= BUDGET):
            bad.append(f"{name}: {run.status} gap={g:.2e} t={run.wall_time:.1f}s")
    report(2, not bad, "gaps " + ", ".join(parts) + (f"; failures: {bad}" if bad else ""))
    assert not bad


def test_criterion_3_stationarity_certificates(grid):
    # branches active at the returned point, resolved at the solver's final
    # sampling radius; all gradients are evaluated at the returned point
    bad, worst, worst_point_only = [], 0.0, 0.0
    for (name, n, mode, seed), (f, spec, run) in grid.items():
        if name not in CONVEX_SET:
            continue
        x = run.final_point
        c = stationarity_certificate(f, x, run.extra["store"], radius=run.extra["eps"])
        worst = max(worst, c)
        worst_point_only = max(worst_point_only, stationarity_certificate(f, x))
        if c > 10 * NU_OPT:
            bad.append(f"{name} n={n} {mode}/{seed}: {c:.2e}")
    report(3, not bad, f"worst certificate {worst:.2e} (bound {10 * NU_OPT:.0e}); "
                       f"exact-tie set M(x) alone gives {worst_point_only:.2e}"
                       + (f"; failures: {bad}" if bad else ""))
    assert not bad


def test_criterion_4_qp_suite():
    rng = np.random.default_rng(4)
    viol = 0
    for _ in range(1000):
        k, n = int(rng.integers(1, 11)), int(rng.integers(1, 21))
        V = rng.standard_normal((k, n)) * rng.choice([1e-2, 1.0, 1e2])
        jg = min_norm_point(V)
        tau = 10 * 1e-12 * (1 + max(float(v @ v) for v in V))
        if np.any(V @ jg.direction < jg.norm_sq - tau):
            viol += 1
    grid_bad, grid_gap = 0, 0.0
    for _ in range(200):
        k, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        V = rng.uniform(-2, 2, (k, n))
        got = min_norm_point(V).norm
        coarse = simplex_grid_min_norm(V, 1e-3)
        fine = simplex_grid_min_norm(V, 1e-3, refine=3)
        grid_gap = max(grid_gap, abs(got - fine))
        # never worse than the step-1e-3 lattice, and within 1e-3 of the refined one
        if got > coarse + 1e-3 or abs(got - fine) > 1e-3:
            grid_bad += 1
    trend_ok = True
    fixtures_v = [np.array([[2.0, 0.0], [0.0, 1.0]]), np.array([[1.0, 0.0], [-1.0, 0.0]]),
                  np.array([[-1.0, -1.0], [math.sqrt(2) - 1, math.sqrt(2) - 1]]), rng.standard_normal((4, 3))]
    for V in fixtures_v:
        base = min_norm_point(V).norm
        errs = []
        for delta in (1e-2, 1e-4, 1e-6):
            U = rng.standard_normal(V.shape)
            U = V + delta * U / np.linalg.norm(U, axis=1, keepdims=True)
            errs.append(abs(min_norm_point(U).norm - base))
        trend_ok &= all(e <= d * (1 + 1e-9) + 1e-12 for e, d in zip(errs, (1e-2, 1e-4, 1e-6)))
        trend_ok &= errs[0] >= errs[1] >= errs[2] or max(errs) <= 1e-12
    ok = viol == 0 and grid_bad == 0 and trend_ok
    report(4, ok, f"optimality inequality violations {viol}/1000; grid oracle misses {grid_bad}/200 "
                  f"(max |diff| to refined lattice {grid_gap:.1e}); perturbation trend {'ok' if trend_ok else 'broken'}")
    assert ok


def test_criterion_5_encoding_suite():
    probe_bad = []
    for fx in fixtures().values():
        for x, expected in fx.probes:
            if set(fx.f.active_branches(x)) != set(expected):
                probe_bad.append((fx.name, x.tolist()))
    rng = np.random.default_rng(5)
    n = 10
    cons_bad, fd_bad, skipped, fd_worst = [], [], 0, 0.0
    for name in PROBLEMS:
        f, _ = make_problem(name, n)
        for _ in range(1000):
            x = rng.standard_normal(n) * 1.5
            try:
                rec = f.evaluate(x)
            except DomainError:
                skipped += 1
                continue
            tol = TAU_ACT * (1 + abs(rec.value))
            if rec.value != f.branch_value(rec.primary_code, x):
                cons_bad.append(name)
            for c in f.active_branches(x, record=rec):
                if abs(f.branch_value(c, x) - rec.value) > tol:
                    cons_bad.append(name)
            if min(rec.per_site_margins, default=1.0) <= 1e-4:
                skipped += 1  # central stencil would straddle a kink
                continue
            code = rec.primary_code
            g = f.branch_gradient(code, x)
            g_fd = fd_gradient(lambda z: f.branch_value(code, z), x)
            err = np.linalg.norm(g - g_fd) / max(1.0, np.linalg.norm(g))
            fd_worst = max(fd_worst, err)
            if err > 1e-6:
                fd_bad.append((name, err))
    ok = not probe_bad and not cons_bad and not fd_bad
    report(5, ok, f"probe mismatches {len(probe_bad)}; consistency failures {len(cons_bad)}/9000; "
                  f"FD failures {len(fd_bad)} (worst rel err {fd_worst:.1e}, {skipped} kink-adjacent points skipped)")
    assert ok


def tail_slope(run, f_star, tail=50):
    g = np.array([t.f for t in run.trace] + [run.final_value]) - f_star
    g = g[g > 0][-tail:]
    if g.size < 2:
        return math.nan, g.size
    return float(np.polyfit(np.arange(g.size), np.log10(g), 1)[0]), g.size


def test_criterion_6_ebigd_linear_tail():
    cases = [("gen_MAXQ", np.ones(10), EbigdConfig(alpha=0.5)),
             ("Chained_CB3_II", initial_point("Chained_CB3_II", 10), EbigdConfig())]
    parts, ok = [], True
    for name, x0, cfg in cases:
        f, spec = make_problem(name, 10)
        cfg.f_target = spec.f_star + 1e-9
        cfg.time_limit = BUDGET
        run = solve_ebigd(f, x0, cfg)
        s, m = tail_slope(run, spec.f_star)
        ok &= m >= 50 and s <= -0.02
        parts.append(f"{name} slope {s:.4f} over {m} its (alpha={cfg.alpha})")
    report(6, ok, "; ".join(parts))
    assert ok


def test_criterion_7_quartic_recovery():
    rng = np.random.default_rng(7)
    worst, bad = 0.0, 0
    for _ in range(200):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 3))
        vals, grads = rng.uniform(-2, 2, m), rng.uniform(-2, 2, (m, n))
        sol = solve_quartic_recovery(vals, grads)
        ref, _ = recovery_grid(vals, grads)
        d = abs(sol.objective - ref)
        worst = max(worst, d)
        bad += d > 1e-6
    trivial_ok = True
    for c, g in [(3.0, [1.0, 2.0]), (-1.5, [0.0]), (0.0, [5.0, -1.0, 2.0])]:
        sol = solve_quartic_recovery([c], [g])
        trivial_ok &= sol.z_star == c and np.all(sol.s_star == 0.0)
    ok = bad == 0 and trivial_ok
    report(7, ok, f"{bad}/200 off the grid oracle (max diff {worst:.1e}); trivial cases exact: {trivial_ok}")
    assert ok


def test_criterion_8_bigd_vs_gs():
    name, n = "Chained_CB3_II", 50
    f, spec = make_problem(name, n)
    parts, ok = [], True
    for seed in (1, 2, 3):
        x0 = initial_point(name, n, "random", seed)
        b = solve_practical(f, x0, PracticalConfig(time_limit=BUDGET))
        g = solve_gs(f, x0, GsConfig(seed=seed, time_limit=BUDGET))
        ok &= b.func_evals < g.func_evals and b.qp_time < g.qp_time
        parts.append(f"seed {seed}: evals {b.func_evals} vs {g.func_evals}, qp {b.qp_time:.3f}s vs {g.qp_time:.3f}s")
    report(8, ok, "bigd-practical vs gs; " + "; ".join(parts))
    assert ok


def test_criterion_9_determinism(grid):
    again = run_grid()
    diff = [case for case in grid if fingerprint(grid[case][2]) != fingerprint(again[case][2])]
    timed_out = [case for case in grid if str(grid[case][2].status) == "TimeLimit"]
    report(9, not diff, f"{len(grid)} grid runs repeated, {len(diff)} differ in non-timing outputs"
                        + (f" ({len(timed_out)} hit the time limit)" if timed_out else ""))
    assert not diff
