"""Benchmark problems and small worked examples as encodable functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import (
    Abs,
    EncodableFunction,
    Exp,
    Interval,
    Linear,
    Log,
    Max,
    Piece,
    Piecewise,
    Var,
)

PROBLEMS = (
    "gen_MAXQ",
    "gen_MXHILB",
    "Chained_LQ",
    "Chained_CB3_I",
    "Chained_CB3_II",
    "num_active_faces",
    "brown_func2",
    "Chained_Crescent_I",
    "Chained_Crescent_II",
)
CONVEX = frozenset(PROBLEMS[:5])
CHAINED = frozenset(p for p in PROBLEMS if p.startswith("Chained") or p == "brown_func2")


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    n: int
    f_star: float
    convex: bool
    preset_x0: np.ndarray = field(repr=False)


def _maxq(x, n):
    return Max(*[xi**2 for xi in x])


def _mxhilb(x, n):
    rows = []
    for i in range(1, n + 1):
        coeffs = [1.0 / (i + j - 1) for j in range(1, n + 1)]
        rows.append(Abs(Linear(coeffs)))
    return Max(*rows)


def _lq(x, n):
    terms = []
    for i in range(n - 1):
        a, b = x[i], x[i + 1]
        base = -a - b
        terms.append(Max(base, base + (a**2 + b**2 - 1.0)))
    return sum(terms[1:], terms[0])


def _cb3_parts(a, b):
    return (a**4 + b**2, (2.0 - a) ** 2 + (2.0 - b) ** 2, 2.0 * Exp(b - a))


def _cb3_i(x, n):
    terms = [Max(*_cb3_parts(x[i], x[i + 1])) for i in range(n - 1)]
    return sum(terms[1:], terms[0])


def _cb3_ii(x, n):
    parts = [_cb3_parts(x[i], x[i + 1]) for i in range(n - 1)]
    sums = [sum((p[k] for p in parts[1:]), parts[0][k]) for k in range(3)]
    return Max(*sums)


def _naf(x, n):
    # log(|y| + 1); the argument is >= 1 so the log is always defined
    def g(lin):
        return Log(Abs(lin) + 1.0)

    args = [g(Linear(-np.ones(n)))]
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        args.append(g(Linear(e)))
    return Max(*args)


def _brown(x, n):
    terms = []
    for i in range(n - 1):
        a, b = x[i], x[i + 1]
        terms.append(Abs(a) ** (b**2 + 1.0) + Abs(b) ** (a**2 + 1.0))
    return sum(terms[1:], terms[0])


def _crescent_parts(a, b):
    return (a**2 + (b - 1.0) ** 2 + b - 1.0, -(a**2) - (b - 1.0) ** 2 + b + 1.0)


def _crescent_i(x, n):
    parts = [_crescent_parts(x[i], x[i + 1]) for i in range(n - 1)]
    s1 = sum((p[0] for p in parts[1:]), parts[0][0])
    s2 = sum((p[1] for p in parts[1:]), parts[0][1])
    return Max(s1, s2)


def _crescent_ii(x, n):
    terms = [Max(*_crescent_parts(x[i], x[i + 1])) for i in range(n - 1)]
    return sum(terms[1:], terms[0])


_BUILDERS = {
    "gen_MAXQ": _maxq,
    "gen_MXHILB": _mxhilb,
    "Chained_LQ": _lq,
    "Chained_CB3_I": _cb3_i,
    "Chained_CB3_II": _cb3_ii,
    "num_active_faces": _naf,
    "brown_func2": _brown,
    "Chained_Crescent_I": _crescent_i,
    "Chained_Crescent_II": _crescent_ii,
}


def f_star(name: str, n: int) -> float:
    if name == "Chained_LQ":
        return -math.sqrt(2.0) * (n - 1)
    if name in ("Chained_CB3_I", "Chained_CB3_II"):
        return 2.0 * (n - 1)
    return 0.0


def _preset(name: str, n: int) -> np.ndarray:
    # starting points of the limited-memory bundle test set (Haarala et al. 2004)
    i = np.arange(1, n + 1, dtype=float)
    odd = (np.arange(1, n + 1) % 2) == 1
    if name == "gen_MAXQ":
        return np.where(i <= n // 2, i, -i)
    if name in ("gen_MXHILB", "num_active_faces"):
        return np.ones(n)
    if name == "Chained_LQ":
        return np.full(n, -0.5)
    if name in ("Chained_CB3_I", "Chained_CB3_II"):
        return np.full(n, 2.0)
    if name == "brown_func2":
        return np.where(odd, -1.0, 1.0)
    if name in ("Chained_Crescent_I", "Chained_Crescent_II"):
        return np.where(odd, -1.5, 2.0)
    raise KeyError(name)


def _check(name: str, n: int):
    if name not in _BUILDERS:
        raise ValueError(f"unknown problem {name!r}; expected one of {', '.join(PROBLEMS)}")
    if not isinstance(n, (int, np.integer)) or n < (2 if name in CHAINED else 1):
        raise ValueError(f"invalid dimension {n!r} for {name}")


def make_problem(name: str, n: int) -> tuple[EncodableFunction, ProblemSpec]:
    _check(name, n)
    n = int(n)
    x = [Var(i) for i in range(n)]
    f = EncodableFunction(_BUILDERS[name](x, n), n, name=name)
    x0 = _preset(name, n)
    x0.setflags(write=False)
    return f, ProblemSpec(name, n, f_star(name, n), name in CONVEX, x0)


def initial_point(name: str, n: int, mode: str = "preset", seed: int | None = None) -> np.ndarray:
    _check(name, n)
    if mode == "preset":
        return _preset(name, int(n)).copy()
    if mode == "random":
        return np.random.default_rng(seed).standard_normal(int(n))
    raise ValueError(f"unknown init mode {mode!r}; expected 'preset' or 'random'")


# --------------------------------------------------------------------------
# worked examples
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Fixture:
    name: str
    f: EncodableFunction
    # probe point -> expected active branch codes
    probes: tuple[tuple[np.ndarray, frozenset], ...]
    notes: dict = field(default_factory=dict)


def example_max3() -> EncodableFunction:
    """max{-x + 1, x/4, x - 6} in one variable."""
    x = Var(0)
    return EncodableFunction(Max(-x + 1.0, 0.25 * x, x - 6.0), 1, name="example_max3")


def example_crescent_abs(n: int = 3) -> EncodableFunction:
    """Chained Crescent II with absolute values: three operator sites per term."""
    if n < 2:
        raise ValueError("needs n >= 2")
    x = [Var(i) for i in range(n)]
    terms = []
    for i in range(n - 1):
        a, b = x[i], x[i + 1]
        terms.append(
            Max(
                a**2 + (b - 1.0) ** 2 + Abs(b - 1.0),
                -(a**2) - (b - 1.0) ** 2 + Abs(b + 1.0),
            )
        )
    return EncodableFunction(sum(terms[1:], terms[0]), n, name="example_crescent_abs")


def example_rule_based() -> EncodableFunction:
    """Three quadratic/affine pieces on (0,2], (2,4], (4,6) with overlapping domains."""
    x = Var(0)
    pieces = [
        Piece(-0.5 * x**2 + 2.0 * x, Interval(0.0, 3.0), Interval(0.0, 2.0, hi_closed=True)),
        Piece(0.5 * x**2 - 4.0 * x + 8.0, Interval(1.0, 5.0), Interval(2.0, 4.0, hi_closed=True)),
        Piece(1.5 * x - 6.0, Interval(3.0, 6.0), Interval(4.0, 6.0)),
    ]
    return EncodableFunction(Piecewise(x, pieces), 1, name="example_rule_based")


def fixtures() -> dict[str, Fixture]:
    ex1 = Fixture(
        "example_max3",
        example_max3(),
        tuple(
            (np.array([p]), frozenset(c))
            for p, c in [
                (0.0, {(1,)}),
                (0.8, {(1,), (2,)}),
                (4.0, {(2,)}),
                (8.0, {(2,), (3,)}),
                (10.0, {(3,)}),
            ]
        ),
        {"active_domains": {(1,): (-math.inf, 0.8), (2,): (0.8, 8.0), (3,): (8.0, math.inf)}},
    )
    ex2_f = example_crescent_abs(3)
    ex2 = Fixture(
        "example_crescent_abs",
        ex2_f,
        (
            # first max argument wins both terms; |x3 - 1| sits on its kink
            (np.array([1.0, 2.0, 1.0]), frozenset({(1, 1, 1, 1, 1, 1), (1, 1, 1, 1, 2, 1)})),
            # both max sites tie and both |x_{i+1} - 1| sites sit on their kink
            (np.array([1.0, 1.0, 1.0]), frozenset(
                {(a, b, 1, c, d, 1) for a in (1, 2) for b in (1, 2) for c in (1, 2) for d in (1, 2)}
            )),
        ),
        {"code_length": 6},
    )
    ex3 = Fixture(
        "example_rule_based",
        example_rule_based(),
        (
            (np.array([1.0]), frozenset({(1,)})),
            (np.array([2.0]), frozenset({(1,), (2,)})),
            (np.array([3.0]), frozenset({(2,)})),
            (np.array([4.0]), frozenset({(2,), (3,)})),
            (np.array([5.0]), frozenset({(3,)})),
        ),
        {
            "domains": {(1,): (0.0, 3.0), (2,): (1.0, 5.0), (3,): (3.0, 6.0)},
            "active_domains": {(1,): (0.0, 2.0), (2,): (2.0, 4.0), (3,): (4.0, 6.0)},
        },
    )
    return {fx.name: fx for fx in (ex1, ex2, ex3)}
