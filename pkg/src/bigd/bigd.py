"""Branch-information-driven gradient descent.

``solve_bigd`` is the neighbourhood/trust-region style method that grows the
branch set one representative point at a time; ``solve_practical`` is the
radius/target schedule variant used for benchmarking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoding import DEFAULT_BRANCH_CAP, TAU_ACT
from .minnorm import DEFAULT_TOL, min_norm_point
from .runs import Recorder, SolverRun, Status, as_counting, check_pos, check_unit

TOL_STAT = 1e-8


def step_floor(x) -> float:
    return 1e-16 * (1.0 + float(np.linalg.norm(x)))


class BranchStore:
    """Visited branches, each with one representative point.

    Points live in a growing array so distance queries are one vectorized
    pass.  Gradients at representatives are cached until the representative
    is replaced.
    """

    def __init__(self, n: int):
        self.n = n
        self.codes: list[tuple] = []
        self.index: dict[tuple, int] = {}
        self._pts = np.empty((16, n))
        self._grad: dict[int, np.ndarray] = {}
        # active codes at points that have served as trial points
        self._active_at: dict[bytes, tuple] = {}

    def __len__(self):
        return len(self.codes)

    def __contains__(self, code):
        return code in self.index

    @property
    def points(self) -> np.ndarray:
        return self._pts[: len(self.codes)]

    def point(self, code) -> np.ndarray:
        return self._pts[self.index[code]]

    def items(self):
        for i, c in enumerate(self.codes):
            yield c, self._pts[i]

    def distances(self, x) -> np.ndarray:
        return np.linalg.norm(self.points - x, axis=1)

    def within(self, x, r: float, strict: bool = False) -> np.ndarray:
        d = self.distances(x)
        return np.flatnonzero(d < r if strict else d <= r)

    def active_at(self, z) -> tuple:
        return self._active_at[np.asarray(z, dtype=float).tobytes()]

    def _append(self, code, z):
        i = len(self.codes)
        if i == self._pts.shape[0]:
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
        self._pts[i] = z
        self.codes.append(code)
        self.index[code] = i

    def update(self, x, x_trial, active, remember: bool = True) -> int:
        """Insert/replace representatives for the codes active at x_trial.

        Returns the number of entries touched.
        """
        x_trial = np.array(x_trial, dtype=float)
        if remember:
            self._active_at[x_trial.tobytes()] = active
        dt = float(np.linalg.norm(x_trial - x))
        touched = 0
        for code in active:
            i = self.index.get(code)
            if i is None:
                self._append(code, x_trial)
                touched += 1
            elif dt < float(np.linalg.norm(self._pts[i] - x)):
                self._pts[i] = x_trial
                self._grad.pop(i, None)
                touched += 1
        return touched

    def gradient(self, i: int, f) -> np.ndarray:
        g = self._grad.get(i)
        if g is None:
            g = self._grad[i] = f.branch_gradient(self.codes[i], self._pts[i])
        return g

    def gradients(self, idx, f) -> np.ndarray:
        """Gradient matrix for entries ``idx``; missing ones are computed
        in one batch per distinct representative point."""
        missing: dict[bytes, list[int]] = {}
        for i in idx:
            if i not in self._grad:
                missing.setdefault(self._pts[i].tobytes(), []).append(int(i))
        for group in missing.values():
            z = self._pts[group[0]]
            gs = f.branch_gradients([self.codes[i] for i in group], z)
            for i, g in zip(group, gs):
                self._grad[i] = g
        if len(idx) == 0:
            return np.empty((0, self.n))
        return np.array([self._grad[i] for i in idx])


def branch_point_update(store: BranchStore, x, x_trial, f, active=None) -> BranchStore:
    """Record the branches active at x_trial, keeping representatives closest to x."""
    if active is None:
        active = f.active_branches(x_trial)
    store.update(np.asarray(x, dtype=float), x_trial, active)
    return store


# --------------------------------------------------------------------------
# Algorithm with neighbourhood growth
# --------------------------------------------------------------------------


@dataclass
class BigdConfig:
    r0: float = 0.1
    alpha_max: float = 1.0
    rho0: float = 0.01
    mu_dec: float = 0.5
    branch_cap: int = DEFAULT_BRANCH_CAP
    max_outer: int = 10_000
    time_limit: float | None = None
    tol_stat: float = TOL_STAT
    qp_tol: float = DEFAULT_TOL

    def __post_init__(self):
        check_pos("r0", self.r0)
        check_pos("alpha_max", self.alpha_max)
        check_unit("rho0", self.rho0)
        check_unit("mu_dec", self.mu_dec)
        if self.branch_cap < 1 or self.max_outer < 1:
            raise ValueError("branch_cap and max_outer must be positive")


def _distinct_points(store: BranchStore, idx, x):
    """Distinct representative points among ``idx``, nearest first.

    Equal distances keep insertion order (argsort is stable).
    """
    seen: set[bytes] = set()
    order = []
    pts = store.points
    for i in idx:
        key = pts[i].tobytes()
        if key not in seen:
            seen.add(key)
            order.append(i)
    order = np.asarray(order, dtype=int)
    if order.size == 0:
        return order, np.empty(0)
    d = np.linalg.norm(pts[order] - x, axis=1)
    perm = np.argsort(d, kind="stable")
    return order[perm], d[perm]


def branch_selection(store: BranchStore, x, k: int, f=None, candidates=None):
    """Codes active at the k distinct nearest representatives, and the k-th distance."""
    x = np.asarray(x, dtype=float)
    idx = np.arange(len(store)) if candidates is None else candidates
    order, dist = _distinct_points(store, idx, x)
    if not 1 <= k <= order.size:
        raise ValueError(f"k={k} outside [1, {order.size}] distinct stored points")
    codes: dict[tuple, None] = {}
    for i in order[:k]:
        z = store.points[i]
        try:
            act = store.active_at(z)
        except KeyError:
            act = f.active_branches(z)
            store._active_at[z.tobytes()] = act
        for c in act:
            codes.setdefault(c)
    return list(codes), float(dist[k - 1])


def _qp_over(store: BranchStore, codes, f, tol):
    G = store.gradients([store.index[c] for c in codes], f)
    return f.min_norm(G, tol)


def line_search(f, x, d, r, eta, k, store, cfg: BigdConfig, fx: float | None = None):
    """Backtracking on the ratio [f(x) - f(x - a d)] / (a ||d||^2).

    Returns (alpha, eta, signal, trials).
    """
    x = np.asarray(x, dtype=float)
    if fx is None:
        fx = f.value(x)
    dn = float(np.linalg.norm(d))
    if dn == 0.0:
        raise ValueError("line search needs a nonzero direction")
    dn2 = dn * dn
    alpha = min(cfg.alpha_max, cfg.r0 / dn)
    floor = step_floor(x)
    signal = 0
    trials = 0
    while True:
        trials += 1
        y = x - alpha * d
        rec, act = f.evaluate_active(y)
        dec = fx - rec.value
        if not math.isfinite(dec):
            raise FloatingPointError("non-finite trial value in line search")
        if dec / (alpha * dn2) >= cfg.rho0:
            if dec > eta:
                eta = dec
                signal = 1
            store.update(y, y, act)
            return alpha, eta, signal, trials
        store.update(x, y, act)
        if (k == 1 or alpha * dn > r) and alpha * dn * cfg.mu_dec >= floor:
            alpha *= cfg.mu_dec
        else:
            return alpha, eta, signal, trials


def termination_check(f, x, store: BranchStore, tol_stat: float = TOL_STAT, qp_tol=DEFAULT_TOL, active=None):
    """Joint gradient over the branches active at x; records x otherwise.

    Returns (stationary, d_norm).
    """
    x = np.asarray(x, dtype=float)
    if active is None:
        active = f.active_branches(x)
    G = np.array([f.branch_gradient(c, x) for c in active])
    jg = f.min_norm(G, qp_tol) if hasattr(f, "min_norm") else min_norm_point(G, qp_tol)
    if jg.norm <= tol_stat:
        return True, jg.norm
    store.update(x, x, active)
    return False, jg.norm


def solve_bigd(f, x_init, cfg: BigdConfig | None = None) -> SolverRun:
    cfg = cfg or BigdConfig()
    cf = as_counting(f, cfg.branch_cap)
    rec = Recorder("bigd", cf, cfg.time_limit)
    x = np.array(x_init, dtype=float)
    store = BranchStore(cf.dim)
    ev, act = cf.evaluate_active(x)
    fx = ev.value
    store.update(x, x, act)

    stationary, dnorm = termination_check(cf, x, store, cfg.tol_stat, cfg.qp_tol, active=act)
    rec.record(0, fx, dnorm, len(act), len(store))
    if stationary:
        return rec.finish(Status.STATIONARY, x, fx, 0, store=store)

    it = 0
    diag = ""
    status = Status.ITER_LIMIT
    while True:
        if it >= cfg.max_outer:
            status = Status.ITER_LIMIT
            break
        if rec.out_of_time():
            status = Status.TIME_LIMIT
            break
        it += 1
        best, n_eff, best_d = _outer_pass(cf, x, fx, store, cfg, store.within(x, cfg.r0))
        if best is None:
            # every candidate failed inside r0: widen to the whole store
            best, n_eff, best_d = _outer_pass(cf, x, fx, store, cfg, None)
        if best is None:
            status = Status.ITER_LIMIT
            diag = "no descent candidate over the full branch store"
            rec.record(it, fx, best_d, n_eff, len(store))
            break
        alpha, d = best
        x = x - alpha * d
        ev, act = cf.evaluate_active(x)
        fx = ev.value
        stationary, dnorm = termination_check(cf, x, store, cfg.tol_stat, cfg.qp_tol, active=act)
        rec.record(it, fx, dnorm, n_eff, len(store))
        if stationary:
            status = Status.STATIONARY
            break
    return rec.finish(status, x, fx, it, diag, store=store)


def _outer_pass(cf, x, fx, store, cfg, candidates):
    """Inner loop over k; returns ((alpha, d) of best decrease or None, |T|, ||d||)."""
    if candidates is None:
        candidates = np.arange(len(store))
    order, _ = _distinct_points(store, candidates, x)
    eta = 0.0
    best = None
    n_eff = 0
    last_norm = 0.0
    k = 0
    while True:
        k += 1
        # points added during this pass are not candidates until the next one;
        # replaced representatives may merge, so recount the distinct points
        if k > _distinct_points(store, order, x)[0].size:
            break
        codes, r = branch_selection(store, x, k, cf, candidates=order)
        jg = _qp_over(store, codes, cf, cfg.qp_tol)
        last_norm = jg.norm
        if jg.norm <= 0.0:
            continue
        d = jg.direction
        alpha, eta, signal, _ = line_search(cf, x, d, r, eta, k, store, cfg, fx=fx)
        if signal:
            best = (alpha, d)
            n_eff = len(codes)
    return best, n_eff, last_norm


# --------------------------------------------------------------------------
# Practical variant
# --------------------------------------------------------------------------


@dataclass
class PracticalConfig:
    eps0: float = 0.1
    nu0: float = 1e-3
    gamma: float = 0.5
    eps_opt: float = 1e-5
    nu_opt: float = 1e-4
    theta_eps: float = 0.1
    theta_nu: float = 0.9
    rho0: float = 1e-2
    max_iter: int = 1_000_000
    time_limit: float | None = None
    branch_cap: int = DEFAULT_BRANCH_CAP
    qp_tol: float = DEFAULT_TOL

    def __post_init__(self):
        for name in ("eps0", "nu0", "eps_opt", "nu_opt"):
            check_pos(name, getattr(self, name))
        for name in ("gamma", "theta_eps", "theta_nu", "rho0"):
            check_unit(name, getattr(self, name))
        if self.max_iter < 1 or self.branch_cap < 1:
            raise ValueError("max_iter and branch_cap must be positive")


def _hidden_active(f, x, fx, code) -> bool:
    """True if ``code`` is active at x (used when M(x) was only partially enumerated)."""
    if not f.is_feasible_branch(code, x):
        return False
    return abs(f.branch_value(code, x) - fx) <= TAU_ACT * (1.0 + abs(fx))


def practical_line_search(f, x, fx, g, gnorm, store, cfg: PracticalConfig, used=None, partial=False):
    """Backtracking along g/||g|| with ratio [f(x) - f(x - a d)] / (a ||g||).

    ``used`` holds the codes behind g and ``partial`` says M(x) hit the
    enumeration cap.  In that case a failed trial whose own branch is active
    at x but missing from ``used`` is recorded at x and the search ends
    early, since g was built without that branch.

    Returns (alpha, trial point, trial value, trials, store entries touched);
    alpha is None when no step was accepted.
    """
    d = g / gnorm
    alpha = 1.0
    floor = step_floor(x)
    trials = 0
    touched = 0
    while alpha >= floor:
        trials += 1
        y = x - alpha * d
        ev, act = f.evaluate_active(y)
        dec = fx - ev.value
        if dec / (alpha * gnorm) >= cfg.rho0:
            store.update(y, y, act)
            return alpha, y, ev.value, trials, touched
        touched += store.update(x, y, act)
        code = ev.primary_code
        if partial and code not in used and _hidden_active(f, x, fx, code):
            touched += store.update(x, x, (code,), remember=False)
            return None, x, fx, trials, touched
        alpha *= cfg.gamma
    return None, x, fx, trials, touched


def solve_practical(f, x0, cfg: PracticalConfig | None = None) -> SolverRun:
    cfg = cfg or PracticalConfig()
    cf = as_counting(f, cfg.branch_cap)
    rec = Recorder("bigd-practical", cf, cfg.time_limit)
    x = np.array(x0, dtype=float)
    store = BranchStore(cf.dim)
    ev, act = cf.evaluate_active(x)
    fx = ev.value
    # seeding with all of M(x0) rather than one code keeps M(x_k) inside T
    store.update(x, x, act)
    eps, nu = cfg.eps0, cfg.nu0

    status = Status.ITER_LIMIT
    diag = ""
    k = 0
    gnorm = math.inf
    while True:
        if k >= cfg.max_iter:
            break
        if rec.out_of_time():
            status = Status.TIME_LIMIT
            break
        T = store.within(x, eps, strict=True)
        G = store.gradients(T, cf)
        jg = cf.min_norm(G, cfg.qp_tol)
        gnorm = jg.norm
        k += 1
        rec.record(k, fx, gnorm, T.size, len(store))
        if gnorm <= cfg.nu_opt and eps <= cfg.eps_opt:
            status = Status.TOLERANCE
            break
        if gnorm <= nu:
            nu *= cfg.theta_nu
            eps *= cfg.theta_eps
            continue
        used = {store.codes[i] for i in T} if act.exceeded else None
        alpha, y, fy, _, touched = practical_line_search(
            cf, x, fx, jg.direction, gnorm, store, cfg, used, act.exceeded
        )
        if alpha is None:
            if touched:
                # capped active sets can hide the branch that blocks descent;
                # the failed trials recorded it, so retry with the richer store
                continue
            diag = f"line search stagnated below step floor at iteration {k}"
            break
        x, fx = y, fy
        act = store.active_at(x)
    return rec.finish(status, x, fx, k, diag, store=store, eps=eps, nu=nu, g_norm=gnorm)


def stationarity_certificate(f, x, store: BranchStore | None = None, radius: float = 0.0, tol=DEFAULT_TOL) -> float:
    """Min-norm of branch gradients evaluated at x.

    Branches are those active at x plus, when a store is given, every stored
    branch whose representative lies within ``radius`` of x.
    """
    x = np.asarray(x, dtype=float)
    codes = dict.fromkeys(f.active_branches(x))
    if store is not None and radius > 0.0:
        for i in store.within(x, radius):
            codes.setdefault(store.codes[i])
    G = np.array([f.branch_gradient(c, x) for c in codes if f.is_feasible_branch(c, x)])
    return min_norm_point(G, tol).norm
