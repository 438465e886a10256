"""Shared solver plumbing: evaluation counters, iteration records, run results."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .encoding import DEFAULT_BRANCH_CAP, ActiveBranches, EncodableFunction, EvalRecord
from .minnorm import DEFAULT_TOL, JointGradient, min_norm_point


class Status(str, Enum):
    STATIONARY = "StationaryFound"
    TOLERANCE = "ToleranceMet"
    ITER_LIMIT = "IterLimit"
    TIME_LIMIT = "TimeLimit"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    f: float
    d_norm: float
    n_effective: int  # |T|, branches feeding the QP
    n_visited: int  # |Theta_disc|
    func_evals: int
    grad_evals: int
    qp_time: float
    wall_s: float


@dataclass
class SolverRun:
    algorithm: str
    status: Status
    final_point: np.ndarray
    final_value: float
    trace: list[IterationRecord]
    iterations: int
    func_evals: int
    grad_evals: int
    qp_time: float
    eval_time: float
    wall_time: float
    diagnostic: str = ""
    # solver-specific leftovers (final store, final radius, ...)
    extra: dict = field(default_factory=dict, repr=False)


class CountingFunction:
    """Wraps an EncodableFunction and counts/times every oracle call.

    Function evaluations are calls that return f or a branch value;
    gradient evaluations are branch-gradient calls.  The branch values
    probed internally while enumerating ties are part of one evaluation.
    """

    def __init__(self, f: EncodableFunction, cap: int = DEFAULT_BRANCH_CAP):
        self.f = f
        self.dim = f.dim
        self.cap = cap
        self.func_evals = 0
        self.grad_evals = 0
        self.eval_time = 0.0
        self.qp_time = 0.0

    def evaluate(self, x) -> EvalRecord:
        t = time.perf_counter()
        try:
            return self.f.evaluate(x)
        finally:
            self.func_evals += 1
            self.eval_time += time.perf_counter() - t

    def value(self, x) -> float:
        return self.evaluate(x).value

    def evaluate_active(self, x) -> tuple[EvalRecord, ActiveBranches]:
        t = time.perf_counter()
        try:
            rec = self.f.evaluate(x)
            return rec, self.f.active_branches(x, self.cap, record=rec)
        finally:
            self.func_evals += 1
            self.eval_time += time.perf_counter() - t

    def active_branches(self, x) -> ActiveBranches:
        return self.evaluate_active(x)[1]

    def branch_value(self, code, x) -> float:
        t = time.perf_counter()
        try:
            return self.f.branch_value(code, x)
        finally:
            self.func_evals += 1
            self.eval_time += time.perf_counter() - t

    def branch_gradient(self, code, x) -> np.ndarray:
        t = time.perf_counter()
        try:
            return self.f.branch_gradient(code, x)
        finally:
            self.grad_evals += 1
            self.eval_time += time.perf_counter() - t

    def branch_gradients(self, codes, x) -> list[np.ndarray]:
        t = time.perf_counter()
        try:
            return self.f.branch_gradients(codes, x)
        finally:
            self.grad_evals += len(codes)
            self.eval_time += time.perf_counter() - t

    def is_feasible_branch(self, code, x) -> bool:
        return self.f.is_feasible_branch(code, x)

    def min_norm(self, vectors, tol: float = DEFAULT_TOL) -> JointGradient:
        t = time.perf_counter()
        try:
            return min_norm_point(vectors, tol)
        finally:
            self.qp_time += time.perf_counter() - t


class Recorder:
    """Collects the trace and produces the final SolverRun."""

    def __init__(self, algorithm: str, cf: CountingFunction, time_limit: float | None):
        self.algorithm = algorithm
        self.cf = cf
        self.time_limit = time_limit
        self.t0 = time.perf_counter()
        self.trace: list[IterationRecord] = []

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def out_of_time(self) -> bool:
        return self.time_limit is not None and self.elapsed() >= self.time_limit

    def record(self, it, fval, d_norm, n_eff, n_vis):
        cf = self.cf
        self.trace.append(
            IterationRecord(
                int(it), float(fval), float(d_norm), int(n_eff), int(n_vis),
                cf.func_evals, cf.grad_evals, cf.qp_time, self.elapsed(),
            )
        )

    def finish(self, status, x, fval, iterations, diagnostic="", **extra) -> SolverRun:
        cf = self.cf
        return SolverRun(
            self.algorithm, Status(status), np.array(x, dtype=float), float(fval),
            self.trace, int(iterations), cf.func_evals, cf.grad_evals,
            cf.qp_time, cf.eval_time, self.elapsed(), diagnostic, extra,
        )


def as_counting(f, cap: int = DEFAULT_BRANCH_CAP) -> CountingFunction:
    if isinstance(f, CountingFunction):
        return f
    return CountingFunction(f, cap)


def check_unit(name: str, v: float):
    if not (0.0 < v < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {v}")


def check_pos(name: str, v: float):
    if not v > 0.0:
        raise ValueError(f"{name} must be positive, got {v}")
