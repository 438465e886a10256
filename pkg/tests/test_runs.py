import numpy as np
import pytest

from bigd import solve_bigd, solve_ebigd, solve_gs, solve_practical
from bigd.baselines import GsConfig
from bigd.bigd import BigdConfig, PracticalConfig
from bigd.ebigd import EbigdConfig
from bigd.problems import initial_point, make_problem
from bigd.runs import CountingFunction, Status


class Tally:
    """Delegates to an EncodableFunction and counts raw oracle calls."""

    def __init__(self, f):
        self.f = f
        self.dim = f.dim
        self.evals = 0
        self.grads = 0

    def evaluate(self, x):
        self.evals += 1
        return self.f.evaluate(x)

    def branch_value(self, code, x):
        self.evals += 1
        return self.f.branch_value(code, x)

    def branch_gradient(self, code, x):
        self.grads += 1
        return self.f.branch_gradient(code, x)

    def branch_gradients(self, codes, x):
        self.grads += len(codes)
        return self.f.branch_gradients(codes, x)

    def active_branches(self, x, cap=64, record=None):
        return self.f.active_branches(x, cap, record)

    def is_feasible_branch(self, code, x):
        return self.f.is_feasible_branch(code, x)


SOLVERS = [
    (solve_practical, None),
    (solve_bigd, BigdConfig(max_outer=30)),
    (solve_ebigd, EbigdConfig(max_iter=50)),
    (solve_gs, GsConfig(max_iter=50)),
]


@pytest.mark.parametrize("solver,cfg", SOLVERS)
def test_counters_match_oracle_calls(solver, cfg):
    f, _ = make_problem("Chained_CB3_I", 6)
    t = Tally(f)
    r = solver(t, initial_point("Chained_CB3_I", 6, "random", 0), cfg)
    assert r.func_evals == t.evals
    assert r.grad_evals == t.grads
    assert r.trace[-1].func_evals <= r.func_evals


def test_counting_wrapper_times_and_counts():
    f, _ = make_problem("gen_MAXQ", 3)
    cf = CountingFunction(f)
    cf.evaluate(np.ones(3))
    cf.branch_value((1,), np.ones(3))
    cf.branch_gradients([(1,), (2,)], np.ones(3))
    cf.min_norm(np.eye(3))
    assert (cf.func_evals, cf.grad_evals) == (2, 2)
    assert cf.eval_time > 0 and cf.qp_time > 0


def test_status_strings():
    assert str(Status.TOLERANCE) == "ToleranceMet"
    assert {s.value for s in Status} == {"StationaryFound", "ToleranceMet", "IterLimit", "TimeLimit"}


def test_time_limit_is_cooperative():
    f, _ = make_problem("Chained_LQ", 30)
    r = solve_practical(f, initial_point("Chained_LQ", 30, "random", 1), PracticalConfig(time_limit=0.2))
    assert r.status == Status.TIME_LIMIT
    assert r.wall_time < 5.0
