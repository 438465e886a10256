"""Enhanced branch-information-driven gradient descent.

Each iteration grows a branch set C at the current point until the joint
gradient passes a sufficient-decrease test, then takes the better of a
joint-gradient step and a gap-reduction step derived from a small convex
quartic program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import DEFAULT_BRANCH_CAP, TAU_ACT
from .minnorm import DEFAULT_TOL
from .runs import Recorder, SolverRun, Status, as_counting, check_pos, check_unit

TOL_STAT = 1e-8


class RecoveryIterationLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class RecoverySolution:
    z_star: float
    s_star: np.ndarray
    objective: float
    newton_iters: int


@dataclass
class EbigdConfig:
    rho0: float = 0.01
    alpha: float = 0.05
    gamma: float = 0.5
    max_iter: int = 10_000
    time_limit: float | None = None
    tau_rec: float = 1e-10
    branch_cap: int = DEFAULT_BRANCH_CAP
    tol_stat: float = TOL_STAT
    # stop with ToleranceMet once f drops to this level (None disables)
    f_target: float | None = None
    qp_tol: float = DEFAULT_TOL

    def __post_init__(self):
        check_unit("rho0", self.rho0)
        check_pos("alpha", self.alpha)
        check_unit("gamma", self.gamma)
        check_pos("tau_rec", self.tau_rec)
        if self.max_iter < 1 or self.branch_cap < 1:
            raise ValueError("max_iter and branch_cap must be positive")


# --------------------------------------------------------------------------
# quartic direction recovery
# --------------------------------------------------------------------------


def recovery_objective(values, gradients, z, s) -> float:
    r = z + np.asarray(gradients) @ s - np.asarray(values)
    ss = float(s @ s)
    return float(r @ r) + ss * ss


def recovery_gradient(values, gradients, z, s) -> np.ndarray:
    G = np.asarray(gradients)
    r = z + G @ s - np.asarray(values)
    gz = 2.0 * r.sum()
    gs = 2.0 * (G.T @ r) + 4.0 * float(s @ s) * s
    return np.concatenate(([gz], gs))


def solve_quartic_recovery(values, gradients, tau_rec: float = 1e-10, max_iter: int = 500) -> RecoverySolution:
    """min over (z, s) of sum_i (z + <g_i, s> - f_i)^2 + ||s||^4.

    Levenberg-damped Newton from (mean f_i, 0).  The iterate never leaves
    the row space of the gradients, which also holds the minimizer.
    """
    f = np.asarray(values, dtype=float).reshape(-1)
    G = np.atleast_2d(np.asarray(gradients, dtype=float))
    if f.size == 0 or G.shape[0] != f.size:
        raise ValueError("values and gradients must be nonempty and of equal length")
    m, n = G.shape
    A = np.hstack([np.ones((m, 1)), G])
    AtA2 = 2.0 * A.T @ A
    u = np.zeros(n + 1)
    u[0] = f.mean() if m > 1 else f[0]

    def obj(u):
        r = A @ u - f
        ss = float(u[1:] @ u[1:])
        return float(r @ r) + ss * ss

    def grad(u):
        r = A @ u - f
        s = u[1:]
        g = 2.0 * (A.T @ r)
        g[1:] += 4.0 * float(s @ s) * s
        return g

    mu = 1e-8
    F = obj(u)
    g = grad(u)
    it = 0
    while np.linalg.norm(g) > tau_rec:
        if it >= max_iter:
            raise RecoveryIterationLimit(f"recovery Newton did not converge in {max_iter} iterations")
        it += 1
        s = u[1:]
        H = AtA2.copy()
        H[1:, 1:] += 4.0 * float(s @ s) * np.eye(n) + 8.0 * np.outer(s, s)
        while True:
            try:
                p = np.linalg.solve(H + mu * np.eye(n + 1), -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            un = u + p
            Fn = obj(un)
            if Fn <= F:
                u, F = un, Fn
                mu = max(mu / 10.0, 1e-20)
                break
            mu *= 10.0
            if mu > 1e20:
                # no decrease possible at this precision
                break
        gn = grad(u)
        if mu > 1e20 or np.array_equal(gn, g):
            g = gn
            break
        g = gn
    return RecoverySolution(float(u[0]), u[1:].copy(), float(F), it)


# --------------------------------------------------------------------------
# helpers at a fixed point
# --------------------------------------------------------------------------


class _PointCache:
    """Branch values and gradients at one point, computed on demand."""

    def __init__(self, f, x):
        self.f = f
        self.x = x
        self.val: dict = {}
        self.grad: dict = {}

    def gradients(self, codes) -> np.ndarray:
        miss = [c for c in codes if c not in self.grad]
        if miss:
            for c, g in zip(miss, self.f.branch_gradients(miss, self.x)):
                self.grad[c] = g
        return np.array([self.grad[c] for c in codes])

    def values(self, codes) -> np.ndarray:
        for c in codes:
            if c not in self.val:
                self.val[c] = self.f.branch_value(c, self.x)
        return np.array([self.val[c] for c in codes])


def gap(f, x, codes) -> float:
    """max minus min branch value over ``codes`` at x."""
    codes = list(codes)
    if not codes:
        raise ValueError("gap needs at least one code")
    v = [f.branch_value(c, x) for c in codes]
    return float(max(v) - min(v))


@dataclass
class Selection:
    codes: list
    direction: np.ndarray
    rho: float = math.nan
    stationary: bool = False
    # set when C stopped growing before the ratio test passed
    saturated: bool = False
    trial: np.ndarray | None = field(default=None, repr=False)
    trial_value: float = math.nan

    def __iter__(self):
        yield self.codes
        yield self.direction


def branch_selection_sequential(f, x, alpha, rho0, cap=DEFAULT_BRANCH_CAP, fx=None, cache=None, qp_tol=DEFAULT_TOL, tol_stat=TOL_STAT) -> Selection:
    """Grow C from the primary branch at x until the joint gradient passes the ratio test."""
    f = as_counting(f, cap)
    x = np.asarray(x, dtype=float)
    if fx is None or cache is None:
        rec = f.evaluate(x)
        fx = rec.value
        primary = rec.primary_code
    else:
        primary = cache.primary
    cache = cache or _PointCache(f, x)
    C = [primary]
    while True:
        jg = f.min_norm(cache.gradients(C), qp_tol)
        d = jg.direction
        if jg.norm <= tol_stat:
            return Selection(C, d, stationary=True)
        y = x - alpha * d
        ev, act = f.evaluate_active(y)
        rho = (fx - ev.value) / (alpha * jg.norm_sq)
        sel = Selection(C, d, rho, trial=y, trial_value=ev.value)
        if rho >= rho0:
            return sel
        new = None
        for code in act:
            if code not in C and f.is_feasible_branch(code, x):
                new = code
                break
        if new is None or len(C) >= cap:
            sel.saturated = True
            return sel
        C = C + [new]


def gap_reduction(f, x, gamma, codes, cfg: EbigdConfig | None = None, fx=None, cache=None):
    """Move along the recovered displacement; returns (y, reduction, codes)."""
    cfg = cfg or EbigdConfig()
    f = as_counting(f, cfg.branch_cap)
    x = np.asarray(x, dtype=float)
    if fx is None:
        fx = f.value(x)
    cache = cache or _PointCache(f, x)
    C = list(codes)
    if not C:
        raise ValueError("gap_reduction needs at least one code")
    for _ in range(cfg.branch_cap):
        sol = solve_quartic_recovery(cache.values(C), cache.gradients(C), cfg.tau_rec)
        y = x - gamma * sol.s_star
        ev, act = f.evaluate_active(y)
        if any(c in act for c in C):
            break
        new = ev.primary_code
        if not f.is_feasible_branch(new, x):
            new = next((c for c in act if c not in C and f.is_feasible_branch(c, x)), None)
        if new is None or len(C) >= cfg.branch_cap:
            break
        C.append(new)
    red = fx - ev.value
    if red >= 0.0:
        return y, red, C
    return x, 0.0, C


def _all_active(f, x, fx, codes, cache) -> bool:
    tol = TAU_ACT * (1.0 + abs(fx))
    return bool(np.all(np.abs(cache.values(codes) - fx) <= tol))


def solve_ebigd(f, x0, cfg: EbigdConfig | None = None) -> SolverRun:
    cfg = cfg or EbigdConfig()
    cf = as_counting(f, cfg.branch_cap)
    rec = Recorder("ebigd", cf, cfg.time_limit)
    x = np.array(x0, dtype=float)
    ev = cf.evaluate(x)
    fx = ev.value
    seen: set = set()
    gaps: list[float] = []
    status = Status.ITER_LIMIT
    diag = ""
    k = 0
    while True:
        if cfg.f_target is not None and fx <= cfg.f_target:
            status = Status.TOLERANCE
            break
        if k >= cfg.max_iter:
            break
        if rec.out_of_time():
            status = Status.TIME_LIMIT
            break
        cache = _PointCache(cf, x)
        cache.primary = ev.primary_code
        sel = branch_selection_sequential(cf, x, cfg.alpha, cfg.rho0, cfg.branch_cap, fx, cache, cfg.qp_tol, cfg.tol_stat)
        C = sel.codes
        seen.update(C)
        dnorm = float(np.linalg.norm(sel.direction))
        k += 1
        if sel.stationary and _all_active(cf, x, fx, C, cache):
            rec.record(k, fx, dnorm, len(C), len(seen))
            status = Status.STATIONARY
            break
        if sel.stationary:
            y1, r1 = x, 0.0
        else:
            y1, r1 = sel.trial, fx - sel.trial_value
        y2, r2, C2 = gap_reduction(cf, x, cfg.gamma, C, cfg, fx, cache)
        seen.update(C2)
        g = float(np.ptp(cache.values(C2)))
        gaps.append(g)
        rec.record(k, fx, dnorm, len(C2), len(seen))
        if max(r1, r2) <= 0.0:
            diag = "no decrease from either joint-gradient or gap-reduction step"
            status = Status.STATIONARY if sel.stationary else Status.ITER_LIMIT
            break
        x = y1 if r1 >= r2 else y2
        ev = cf.evaluate(x)
        fx = ev.value
    return rec.finish(status, x, fx, k, diag, gaps=gaps)
