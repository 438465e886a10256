import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from bigd.ebigd import (
    EbigdConfig, RecoveryIterationLimit, branch_selection_sequential, gap, gap_reduction,
    recovery_gradient, recovery_objective, solve_ebigd, solve_quartic_recovery,
)
from bigd.encoding import EncodableFunction, absolute, variables
from bigd.problems import example_max3, initial_point, make_problem
from bigd.runs import Status
from conftest import fd_gradient
from oracles import recovery_grid


def log_gap_slope(run, f_star, tail=50):
    g = np.array([t.f for t in run.trace] + [run.final_value]) - f_star
    g = g[g > 0][-tail:]
    return np.polyfit(np.arange(g.size), np.log10(g), 1)[0]


# ---- quartic recovery ---------------------------------------------------


def test_recovery_trivial_single():
    sol = solve_quartic_recovery([2.5], [[1.0, -3.0]])
    assert sol.z_star == 2.5 and np.all(sol.s_star == 0.0) and sol.objective == 0.0


def test_recovery_symmetric_pair():
    sol = solve_quartic_recovery([0.0, 0.0], [[1.0], [-1.0]])
    assert sol.z_star == 0.0 and sol.s_star.tolist() == [0.0]


def test_recovery_rejects_mismatch():
    with pytest.raises(ValueError):
        solve_quartic_recovery([1.0, 2.0], [[1.0]])
    with pytest.raises(ValueError):
        solve_quartic_recovery([], np.empty((0, 2)))
    assert issubclass(RecoveryIterationLimit, RuntimeError)


small_instances = st.integers(1, 3).flatmap(
    lambda m: st.integers(1, 2).flatmap(
        lambda n: st.tuples(
            hnp.arrays(np.float64, m, elements=st.floats(-3, 3, allow_nan=False)),
            hnp.arrays(np.float64, (m, n), elements=st.floats(-3, 3, allow_nan=False)),
        )
    )
)


@given(small_instances)
def test_recovery_matches_grid(inst):
    vals, grads = inst
    sol = solve_quartic_recovery(vals, grads)
    best, _ = recovery_grid(vals, grads)
    assert sol.objective <= best + 1e-9
    assert abs(sol.objective - best) <= 1e-6


@given(small_instances)
def test_recovery_stationary(inst):
    vals, grads = inst
    sol = solve_quartic_recovery(vals, grads, tau_rec=1e-10)
    g = recovery_gradient(vals, grads, sol.z_star, sol.s_star)
    assert np.linalg.norm(g) <= 1e-8 * (1 + np.abs(vals).max() + np.abs(grads).max()) ** 3
    u = np.concatenate(([sol.z_star], sol.s_star))
    g_fd = fd_gradient(lambda v: recovery_objective(vals, grads, v[0], v[1:]), u, rel=1e-5)
    np.testing.assert_allclose(g, g_fd, atol=1e-5)


def test_recovery_scaling_near_lq_optimum():
    f, spec = make_problem("Chained_LQ", 2)
    xs = np.full(2, 1 / math.sqrt(2))
    codes = list(f.active_branches(xs))
    u = np.array([0.6, -0.8])
    for delta in (1e-1, 1e-2, 1e-3):
        x = xs + delta * u
        vals = [f.branch_value(c, x) for c in codes]
        grads = f.branch_gradients(codes, x)
        sol = solve_quartic_recovery(vals, grads)
        assert np.linalg.norm(sol.s_star) / delta <= 10
        assert abs(sol.z_star - spec.f_star) / delta**2 <= 100


# ---- gap and selection --------------------------------------------------


def test_gap_examples():
    f = example_max3()
    assert gap(f, [0.0], [(1,)]) == 0.0
    assert gap(f, [0.0], [(1,), (2,)]) == 1.0
    g, _ = make_problem("Chained_LQ", 4)
    x = np.full(4, 1 / math.sqrt(2))
    assert gap(g, x, g.active_branches(x)) <= 1e-10 * (1 + abs(g(x)))


def test_selection_smooth_region():
    f, _ = make_problem("gen_MAXQ", 3)
    sel = branch_selection_sequential(f, np.array([0.1, 0.2, 3.0]), 0.01, 0.01)
    assert len(sel.codes) == 1 and not sel.stationary


def test_selection_abs_kink():
    x = variables(1)
    f = EncodableFunction(absolute(x[0]), 1)
    sel = branch_selection_sequential(f, np.array([1e-3]), 1.0, 0.01)
    assert sel.codes == [(1,), (2,)] and sel.stationary
    assert abs(sel.direction[0]) <= 1e-12


def test_selection_loop_bounded_near_lq_minimizer():
    f, _ = make_problem("Chained_LQ", 2)
    x = np.full(2, 1 / math.sqrt(2)) + np.array([1e-4, -2e-4])
    sel = branch_selection_sequential(f, x, 0.05, 0.01)
    assert len(sel.codes) <= 2


def test_gap_reduction_at_optimum():
    f, _ = make_problem("Chained_LQ", 2)
    x = np.full(2, 1 / math.sqrt(2))
    y, red, C = gap_reduction(f, x, 0.5, list(f.active_branches(x)))
    assert red == 0.0 and np.allclose(y, x, atol=1e-12)


def test_gap_reduction_shrinks_gap_example1():
    f = example_max3()
    x = np.array([0.9])
    before = gap(f, x, [(1,), (2,)])
    y, red, _ = gap_reduction(f, x, 0.5, [(1,), (2,)])
    assert red >= 0.0
    assert gap(f, y, [(1,), (2,)]) < before


def test_gap_reduction_loop_bounded():
    f, _ = make_problem("Chained_CB3_I", 6)
    x = initial_point("Chained_CB3_I", 6, "random", 2)
    cfg = EbigdConfig(branch_cap=3)
    y, red, C = gap_reduction(f, x, 0.5, [f.evaluate(x).primary_code], cfg)
    assert len(C) <= 3 and red >= 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        EbigdConfig(gamma=1.0)
    with pytest.raises(ValueError):
        EbigdConfig(alpha=0.0)


# ---- solver -------------------------------------------------------------


def test_ebigd_maxq_linear_tail():
    f, spec = make_problem("gen_MAXQ", 10)
    r = solve_ebigd(f, np.ones(10), EbigdConfig(alpha=0.5, f_target=1e-9))
    assert r.final_value <= 1e-6
    assert log_gap_slope(r, spec.f_star) < -0.05


def test_ebigd_cb3_ii():
    f, spec = make_problem("Chained_CB3_II", 25)
    r = solve_ebigd(f, initial_point("Chained_CB3_II", 25), EbigdConfig(time_limit=60))
    assert r.final_value - spec.f_star <= 1e-4


def test_ebigd_stationary_start():
    r = solve_ebigd(example_max3(), [0.8])
    assert r.status == Status.STATIONARY and r.iterations == 1


def test_ebigd_never_increases():
    f, _ = make_problem("Chained_Crescent_I", 6)
    r = solve_ebigd(f, initial_point("Chained_Crescent_I", 6), EbigdConfig(max_iter=300))
    fs = [t.f for t in r.trace] + [r.final_value]
    assert all(b <= a for a, b in zip(fs, fs[1:]))
