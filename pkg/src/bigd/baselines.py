"""Gradient sampling baseline.

Only black-box access is used: f(x) with its primary branch code, and the
gradient of that primary branch.  No branch store, no active sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoding import DomainError
from .minnorm import DEFAULT_TOL
from .runs import Recorder, SolverRun, Status, as_counting, check_pos, check_unit


@dataclass
class GsConfig:
    m: int | None = None  # sample size, None means 2n
    eps0: float = 0.1
    theta_eps: float = 0.1
    nu0: float = 1e-3
    theta_nu: float = 0.9
    eps_opt: float = 1e-5
    nu_opt: float = 1e-4
    beta: float = 1e-6  # Armijo constant
    gamma: float = 0.5  # backtracking factor
    max_backtracks: int = 60
    seed: int | None = 0
    max_iter: int = 1_000_000
    time_limit: float | None = None
    qp_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.m is not None and self.m < 1:
            raise ValueError(f"sample size m must be >= 1, got {self.m}")
        check_unit("theta_eps", self.theta_eps)
        check_unit("theta_nu", self.theta_nu)
        check_unit("gamma", self.gamma)
        check_unit("beta", self.beta)
        for name in ("eps0", "nu0", "eps_opt", "nu_opt"):
            check_pos(name, getattr(self, name))
        if self.max_iter < 1 or self.max_backtracks < 1:
            raise ValueError("max_iter and max_backtracks must be positive")

    def sample_size(self, n: int) -> int:
        return 2 * n if self.m is None else self.m


def sample_ball(rng: np.random.Generator, x, eps: float, m: int) -> np.ndarray:
    """m points uniform in the closed Euclidean ball of radius eps around x."""
    n = x.shape[0]
    u = rng.standard_normal((m, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = eps * rng.random(m) ** (1.0 / n)
    return x + u * r[:, None]


def solve_gs(f, x0, cfg: GsConfig | None = None) -> SolverRun:
    cfg = cfg or GsConfig()
    cf = as_counting(f)
    rec = Recorder("gs", cf, cfg.time_limit)
    rng = np.random.default_rng(cfg.seed)
    x = np.array(x0, dtype=float)
    n = x.shape[0]
    m = cfg.sample_size(n)
    eps, nu = cfg.eps0, cfg.nu0

    ev = cf.evaluate(x)
    fx = ev.value
    gx = cf.branch_gradient(ev.primary_code, x)
    seen = {ev.primary_code}
    status = Status.ITER_LIMIT
    diag = ""
    k = 0
    while True:
        if k >= cfg.max_iter:
            break
        if rec.out_of_time():
            status = Status.TIME_LIMIT
            break
        k += 1
        G = [gx]
        for z in sample_ball(rng, x, eps, m):
            try:
                ez = cf.evaluate(z)
                G.append(cf.branch_gradient(ez.primary_code, z))
            except DomainError:
                continue  # sample landed outside the domain; skip it
            seen.add(ez.primary_code)
        jg = cf.min_norm(np.array(G), cfg.qp_tol)
        d, dn = jg.direction, jg.norm
        rec.record(k, fx, dn, len(G), len(seen))
        if dn <= cfg.nu_opt and eps <= cfg.eps_opt:
            status = Status.TOLERANCE
            break
        if dn <= nu:
            nu *= cfg.theta_nu
            eps *= cfg.theta_eps
            continue
        t = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks):
            y = x - t * d
            try:
                ey = cf.evaluate(y)
            except DomainError:
                t *= cfg.gamma
                continue
            # strict decrease guards against the Armijo term rounding away
            if ey.value < fx and ey.value <= fx - cfg.beta * t * jg.norm_sq:
                accepted = True
                break
            t *= cfg.gamma
        if not accepted:
            # the sampled hull missed a nearby kink; tighten the radius
            nu *= cfg.theta_nu
            eps *= cfg.theta_eps
            if eps < 1e-16 * (1.0 + np.linalg.norm(x)):
                diag = "sampling radius underflow without a descent step"
                break
            continue
        x, ev, fx = y, ey, ey.value
        gx = cf.branch_gradient(ev.primary_code, x)
        seen.add(ev.primary_code)
    return rec.finish(status, x, fx, k, diag, eps=eps, nu=nu, sample_size=m)
