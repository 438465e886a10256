"""Minimum-norm point of the convex hull of a finite vector set (Wolfe's method)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12


class QPIterationLimit(RuntimeError):
    """Wolfe iteration cap hit; usually a sign of badly conditioned input."""


@dataclass(frozen=True)
class JointGradient:
    weights: np.ndarray  # lambda, one entry per input vector
    direction: np.ndarray
    norm_sq: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq))


def _dedup(P: np.ndarray):
    first: dict[bytes, int] = {}
    keep, owner = [], np.empty(P.shape[0], dtype=int)
    for i, row in enumerate(P):
        key = row.tobytes()
        j = first.get(key)
        if j is None:
            j = first[key] = len(keep)
            keep.append(i)
        owner[i] = j
    return np.asarray(keep), owner


def _affine_min(Q: np.ndarray) -> np.ndarray:
    """Barycentric weights of the min-norm point of the affine hull of rows of Q."""
    m = Q.shape[0]
    if m == 1:
        return np.ones(1)
    ref = Q[0]
    Dt = (Q[1:] - ref).T  # n x (m-1)
    c = None
    if Dt.shape[0] >= Dt.shape[1]:
        q, r = np.linalg.qr(Dt)
        diag = np.abs(np.diag(r))
        if diag.min() > 1e-12 * max(diag.max(), 1e-300):
            c = np.linalg.solve(r, -(q.T @ ref))
    if c is None:
        c, *_ = np.linalg.lstsq(Dt, -ref, rcond=None)
    return np.concatenate(([1.0 - c.sum()], c))


def min_norm_point(vectors, tol: float = DEFAULT_TOL) -> JointGradient:
    """Solve min ||sum l_i v_i||^2 over the unit simplex.

    Terminates when the optimality gap ||x||^2 - min_j <x, v_j> drops below
    ``tol * (1 + max ||v_j||^2)``.
    """
    P = np.atleast_2d(np.asarray(vectors, dtype=float))
    if P.size == 0 or P.shape[0] == 0:
        raise ValueError("min_norm_point needs at least one vector")
    if not np.all(np.isfinite(P)):
        raise ValueError("min_norm_point got non-finite input")
    k_all, n = P.shape
    keep, owner = _dedup(P)
    U = P[keep]
    k = U.shape[0]

    sq = np.einsum("ij,ij->i", U, U)
    scale = 1.0 + float(sq.max())
    thresh = tol * scale
    cap = 50 * (k_all + n)

    j0 = int(np.argmin(sq))
    S = [j0]
    w = np.ones(1)
    x = U[j0].copy()
    last_xx = math.inf
    it = 0
    while True:
        it += 1
        if it > cap:
            raise QPIterationLimit(f"min-norm iteration cap {cap} exceeded")
        dots = U @ x
        j = int(np.argmin(dots))
        xx = float(x @ x)
        if xx - dots[j] <= thresh or j in S or xx >= last_xx:
            break
        last_xx = xx
        S.append(j)
        w = np.append(w, 0.0)
        while True:
            it += 1
            if it > cap:
                raise QPIterationLimit(f"min-norm iteration cap {cap} exceeded")
            v = _affine_min(U[S])
            if np.all(v > 0.0):
                w = v
                break
            mask = v <= 0.0
            ratios = w[mask] / (w[mask] - v[mask])
            theta = float(min(1.0, ratios.min()))
            w = (1.0 - theta) * w + theta * v
            # drop the blocking point(s); always drop at least one
            drop = w <= 1e-15
            if not drop.any():
                drop[np.flatnonzero(mask)[np.argmin(ratios)]] = True
            S = [s for s, dd in zip(S, drop) if not dd]
            w = w[~drop]
            w = w / w.sum()
        x = w @ U[S]

    weights_u = np.zeros(k)
    weights_u[S] = np.maximum(w, 0.0)
    weights_u /= weights_u.sum()
    weights = np.zeros(k_all)
    weights[keep] = weights_u
    direction = weights_u @ U
    return JointGradient(weights, direction, float(direction @ direction))


def joint_gradient_at(f, pairs, tol: float = DEFAULT_TOL) -> JointGradient:
    """Joint gradient of branches evaluated at their representative points.

    ``pairs`` holds (code, point) tuples; gradients come from
    ``f.branch_gradient`` so infeasible branches propagate as errors.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("joint_gradient_at needs at least one pair")
    G = np.array([f.branch_gradient(code, z) for code, z in pairs])
    return min_norm_point(G, tol)
