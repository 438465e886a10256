"""Expression trees for piecewise-differentiable functions with branch tracking.

A function is built from smooth primitives and nonsmooth *operator sites*
(max, min, abs, positive part, rule-based piecewise).  Evaluating the tree
records which argument every site selected; the tuple of those selections is
the branch code of the smooth piece that produced the value.  Freezing every
site to a code yields the branch function, which is differentiated exactly by
forward propagation of dense gradient vectors.

Selections are 1-based and ordered by site registry position (pre-order,
left to right).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

TAU_ACT = 1e-10
DEFAULT_BRANCH_CAP = 64
# tie candidates examined per returned code before giving up
_EXAMINE_FACTOR = 16
# base slack for powers/logs fed by abs sites whose tie was resolved at tolerance
_BASE_SLACK = 1e-10
_LOG_FLOOR = 1e-300

BranchCode = tuple  # tuple[int, ...]


class DomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


class InfeasibleBranch(DomainError):
    """Raised when a branch function is requested at a point outside its domain."""


# --------------------------------------------------------------------------
# Nodes
# --------------------------------------------------------------------------


def as_node(v) -> "Node":
    if isinstance(v, Node):
        return v
    if isinstance(v, (int, float, np.integer, np.floating)):
        return Const(float(v))
    raise TypeError(f"cannot convert {type(v).__name__} to an expression node")


class Node:
    """Base expression node.  Nodes are immutable once built."""

    is_site = False
    children: tuple["Node", ...] = ()

    def __add__(self, other):
        return Add(self, as_node(other))

    def __radd__(self, other):
        return Add(as_node(other), self)

    def __sub__(self, other):
        return Add(self, Neg(as_node(other)))

    def __rsub__(self, other):
        return Add(as_node(other), Neg(self))

    def __mul__(self, other):
        if isinstance(other, Node):
            if isinstance(other, Const):
                return Scale(other.c, self)
            return Mul(self, other)
        return Scale(float(other), self)

    def __rmul__(self, other):
        return Scale(float(other), self)

    def __truediv__(self, other):
        if isinstance(other, Node):
            raise TypeError("division is only supported by constants")
        return Scale(1.0 / float(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, p):
        if isinstance(p, Node) and not isinstance(p, Const):
            return Pow(self, p)
        p = p.c if isinstance(p, Const) else float(p)
        return PowConst(self, p)

    # smooth nodes implement value(a, x) and grad(a, ga, x);
    # ga entries are ndarray or None (identically zero)


class Var(Node):
    def __init__(self, i: int):
        self.i = int(i)

    def value(self, a, x):
        return float(x[self.i])

    def grad(self, a, ga, x, n):
        g = np.zeros(n)
        g[self.i] = 1.0
        return g


class Const(Node):
    def __init__(self, c: float):
        self.c = float(c)

    def value(self, a, x):
        return self.c

    def grad(self, a, ga, x, n):
        return None


class Linear(Node):
    """Affine form ``offset + coeffs @ x``."""

    def __init__(self, coeffs, offset: float = 0.0):
        self.coeffs = np.asarray(coeffs, dtype=float).copy()
        self.coeffs.setflags(write=False)
        self.offset = float(offset)

    def value(self, a, x):
        return self.offset + float(self.coeffs @ x)

    def grad(self, a, ga, x, n):
        return self.coeffs.copy()


class Add(Node):
    def __init__(self, *children):
        flat = []
        for c in children:
            c = as_node(c)
            # flatten nested sums to keep trees shallow
            if type(c) is Add:
                flat.extend(c.children)
            else:
                flat.append(c)
        self.children = tuple(flat)

    def value(self, a, x):
        return math.fsum(a) if len(a) > 2 else sum(a)

    def grad(self, a, ga, x, n):
        out = None
        for g in ga:
            if g is None:
                continue
            out = g.copy() if out is None else out.__iadd__(g)
        return out


class Neg(Node):
    def __init__(self, a):
        self.children = (as_node(a),)

    def value(self, a, x):
        return -a[0]

    def grad(self, a, ga, x, n):
        return None if ga[0] is None else -ga[0]


class Scale(Node):
    def __init__(self, c: float, a):
        self.c = float(c)
        self.children = (as_node(a),)

    def value(self, a, x):
        return self.c * a[0]

    def grad(self, a, ga, x, n):
        return None if ga[0] is None else self.c * ga[0]


class Mul(Node):
    def __init__(self, a, b):
        self.children = (as_node(a), as_node(b))

    def value(self, a, x):
        return a[0] * a[1]

    def grad(self, a, ga, x, n):
        ga0, ga1 = ga
        if ga0 is None and ga1 is None:
            return None
        if ga0 is None:
            return a[0] * ga1
        if ga1 is None:
            return a[1] * ga0
        return a[1] * ga0 + a[0] * ga1


class PowConst(Node):
    """``a ** p`` for a constant exponent; non-integer p needs a >= 0."""

    def __init__(self, a, p: float):
        self.p = float(p)
        self.children = (as_node(a),)
        self._integral = self.p.is_integer()

    def value(self, a, x):
        b = a[0]
        if not self._integral and b < 0.0:
            if b < -_BASE_SLACK:
                return math.nan
            b = 0.0
        return b**self.p

    def grad(self, a, ga, x, n):
        if ga[0] is None:
            return None
        b = a[0]
        if not self._integral and b < 0.0:
            if b < -_BASE_SLACK:
                return np.full(n, math.nan)
            b = 0.0
        if self.p == 0.0:
            return None
        return (self.p * b ** (self.p - 1.0)) * ga[0]


class Pow(Node):
    """``a ** b`` with a variable exponent; base must be nonnegative."""

    def __init__(self, a, b):
        self.children = (as_node(a), as_node(b))

    def value(self, a, x):
        b, p = a
        if b < 0.0:
            if b < -_BASE_SLACK:
                return math.nan
            b = 0.0
        return b**p

    def grad(self, a, ga, x, n):
        b, p = a
        if b < 0.0:
            if b < -_BASE_SLACK:
                return np.full(n, math.nan)
            b = 0.0
        out = None
        if ga[0] is not None:
            # 0 ** 0 == 1 keeps the one-sided derivative at a zero base with p == 1
            db = p * b ** (p - 1.0) if (b > 0.0 or p >= 1.0) else math.inf
            out = db * ga[0]
        if ga[1] is not None and b > 0.0:
            dp = b**p * math.log(b)
            out = dp * ga[1] if out is None else out + dp * ga[1]
        return out


class Exp(Node):
    def __init__(self, a):
        self.children = (as_node(a),)

    def value(self, a, x):
        return math.exp(a[0])

    def grad(self, a, ga, x, n):
        return None if ga[0] is None else math.exp(a[0]) * ga[0]


class Log(Node):
    def __init__(self, a):
        self.children = (as_node(a),)

    def value(self, a, x):
        if not a[0] > _LOG_FLOOR:
            return math.nan
        return math.log(a[0])

    def grad(self, a, ga, x, n):
        if not a[0] > _LOG_FLOOR:
            return np.full(n, math.nan)
        return None if ga[0] is None else ga[0] / a[0]


# --------------------------------------------------------------------------
# Operator sites
# --------------------------------------------------------------------------


class Site(Node):
    """A nonsmooth operator.  ``select`` returns (value, selection, args)."""

    is_site = True

    @property
    def arity(self) -> int:
        return len(self.children)

    def frozen(self, a, sel):
        return a[sel - 1]

    def frozen_grad(self, a, ga, sel, n):
        return ga[sel - 1]

    def candidates(self, a, sel, tol) -> tuple[list[int], float]:
        """Selections tied with ``sel`` at tolerance ``tol`` and the margin."""
        v = a[sel - 1]
        ties = [sel]
        margin = math.inf
        for j, aj in enumerate(a, start=1):
            if j == sel or aj != aj:
                continue
            gap = abs(v - aj)
            if gap <= tol:
                ties.append(j)
            margin = min(margin, gap)
        return ties, margin


class Max(Site):
    def __init__(self, *args):
        if not args:
            raise ValueError("max needs at least one argument")
        self.children = tuple(as_node(a) for a in args)

    def select(self, a):
        best, sel = -math.inf, 0
        for j, aj in enumerate(a, start=1):
            if aj > best:  # strict: lowest index wins exact ties, NaN never wins
                best, sel = aj, j
        if sel == 0:
            return math.nan, 1
        return best, sel


class Min(Site):
    def __init__(self, *args):
        if not args:
            raise ValueError("min needs at least one argument")
        self.children = tuple(as_node(a) for a in args)

    def select(self, a):
        best, sel = math.inf, 0
        for j, aj in enumerate(a, start=1):
            if aj < best:
                best, sel = aj, j
        if sel == 0:
            return math.nan, 1
        return best, sel


class Abs(Site):
    """|u|: selection 1 is +u, selection 2 is -u."""

    def __init__(self, a):
        self.children = (as_node(a),)

    @property
    def arity(self):
        return 2

    def select(self, a):
        u = a[0]
        if u != u:
            return math.nan, 1
        return (u, 1) if u >= 0.0 else (-u, 2)

    def frozen(self, a, sel):
        return a[0] if sel == 1 else -a[0]

    def frozen_grad(self, a, ga, sel, n):
        g = ga[0]
        if g is None or sel == 1:
            return g
        return -g

    def candidates(self, a, sel, tol):
        u = abs(a[0])
        return ([sel, 3 - sel] if u <= tol else [sel]), u


class Pos(Site):
    """max(u, 0): selection 1 is u, selection 2 is 0."""

    def __init__(self, a):
        self.children = (as_node(a),)

    @property
    def arity(self):
        return 2

    def select(self, a):
        u = a[0]
        if u != u:
            return math.nan, 1
        return (u, 1) if u >= 0.0 else (0.0, 2)

    def frozen(self, a, sel):
        return a[0] if sel == 1 else 0.0

    def frozen_grad(self, a, ga, sel, n):
        return ga[0] if sel == 1 else None

    def candidates(self, a, sel, tol):
        u = abs(a[0])
        return ([sel, 3 - sel] if u <= tol else [sel]), u


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, t: float, slack: float = 0.0) -> bool:
        lo_ok = t > self.lo - slack or (self.lo_closed and t == self.lo)
        hi_ok = t < self.hi + slack or (self.hi_closed and t == self.hi)
        return lo_ok and hi_ok

    @property
    def bounds(self) -> str:
        return ("c" if self.lo_closed else "o") + ("c" if self.hi_closed else "o")


@dataclass(frozen=True)
class Piece:
    """One smooth piece: ``expr`` is defined on the open ``domain`` and
    selected by evaluation when the argument lies in ``rule``."""

    expr: Node
    domain: Interval
    rule: Interval


class Piecewise(Site):
    """Rule-based piecewise function of a scalar argument node.

    children[0] is the argument; children[1:] are the piece expressions.
    """

    def __init__(self, arg, pieces: Sequence[Piece]):
        if not pieces:
            raise ValueError("piecewise needs at least one piece")
        self.pieces = tuple(pieces)
        self.children = (as_node(arg),) + tuple(as_node(p.expr) for p in self.pieces)

    @property
    def arity(self):
        return len(self.pieces)

    def _in_domain(self, t, j, tol):
        d = self.pieces[j - 1].domain
        # active domains are closed: boundary membership uses closed comparison
        return d.lo - tol <= t <= d.hi + tol

    def select(self, a):
        t = a[0]
        for j, p in enumerate(self.pieces, start=1):
            if p.rule.contains(t):
                return a[j], j
        return math.nan, 1

    def frozen(self, a, sel):
        if not self._in_domain(a[0], sel, TAU_ACT * (1.0 + abs(a[0]))):
            return math.nan
        return a[sel]

    def frozen_grad(self, a, ga, sel, n):
        if not self._in_domain(a[0], sel, TAU_ACT * (1.0 + abs(a[0]))):
            return np.full(n, math.nan)
        return ga[sel]

    def candidates(self, a, sel, tol):
        t = a[0]
        v = a[sel]
        ties = [sel]
        for j in range(1, len(self.pieces) + 1):
            if j == sel:
                continue
            aj = a[j]
            if aj == aj and self._in_domain(t, j, tol) and abs(aj - v) <= tol:
                ties.append(j)
        r = self.pieces[sel - 1].rule
        margin = min(abs(t - r.lo), abs(t - r.hi))
        return ties, margin


def maximum(*args) -> Max:
    return Max(*args)


def minimum(*args) -> Min:
    return Min(*args)


def absolute(a) -> Abs:
    return Abs(a)


def positive(a) -> Pos:
    return Pos(a)


def exp(a) -> Exp:
    return Exp(a)


def log(a) -> Log:
    return Log(a)


def variables(n: int) -> list[Var]:
    return [Var(i) for i in range(n)]


# --------------------------------------------------------------------------
# Compiled function
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    value: float
    primary_code: BranchCode
    per_site_margins: tuple[float, ...]
    # per-site selections tied with the primary one (primary listed first)
    site_ties: tuple[tuple[int, ...], ...] = field(repr=False, default=())
    # values of every compiled node, reused for cheap re-evaluation of nearby codes
    node_values: tuple = field(repr=False, compare=False, default=())


@dataclass(frozen=True)
class ActiveBranches:
    """Active branch codes at a point; ``exceeded`` flags a capped enumeration."""

    codes: tuple[BranchCode, ...]
    exceeded: bool = False

    def __iter__(self) -> Iterator[BranchCode]:
        return iter(self.codes)

    def __len__(self) -> int:
        return len(self.codes)

    def __contains__(self, code) -> bool:
        return code in self.codes


def _tie_codes(primary, site_ties):
    """Codes from the per-site tie sets, fewest deviations from ``primary`` first.

    The primary code itself is not yielded.
    """
    alt = [(s, t[1:]) for s, t in enumerate(site_ties) if len(t) > 1]
    for k in range(1, len(alt) + 1):
        for group in itertools.combinations(alt, k):
            sites = [s for s, _ in group]
            for choice in itertools.product(*(a for _, a in group)):
                code = list(primary)
                for s, c in zip(sites, choice):
                    code[s] = c
                yield tuple(code)


def _patch(g, old, new):
    """g - old + new for gradient vectors where None means zero."""
    if old is None and new is None:
        return g
    out = np.zeros_like(old if old is not None else new) if g is None else g.copy()
    if old is not None:
        out -= old
    if new is not None:
        out += new
    return out


class EncodableFunction:
    """A piecewise-differentiable function given by an expression tree.

    Immutable after construction; every call allocates its own scratch so a
    single instance can be shared between concurrent solver runs.
    """

    def __init__(self, root: Node, dim: int, name: str | None = None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.root = as_node(root)
        self.dim = int(dim)
        self.name = name
        self._compile()

    def _compile(self):
        order: list[Node] = []
        index: dict[int, int] = {}
        # iterative post-order over the DAG, shared nodes compiled once
        stack = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in index:
                continue
            if expanded:
                index[id(node)] = len(order)
                order.append(node)
                continue
            stack.append((node, True))
            for c in reversed(node.children):
                if id(c) not in index:
                    stack.append((c, False))
        # registry: pre-order, left to right
        sites: list[Node] = []
        seen: set[int] = set()
        stack2 = [self.root]
        while stack2:
            node = stack2.pop()
            if id(node) in seen:
                continue
            seen.add(id(node))
            if node.is_site:
                sites.append(node)
            stack2.extend(reversed(node.children))
        site_no = {id(s): k for k, s in enumerate(sites)}
        self._nodes = order
        self._kids = [tuple(index[id(c)] for c in nd.children) for nd in order]
        self._site_of = [site_no.get(id(nd), -1) for nd in order]
        self.operator_registry = tuple(sites)
        # ancestors (inclusive, post-order sorted) of every site node
        parents: list[list[int]] = [[] for _ in order]
        for k, ch in enumerate(self._kids):
            for c in ch:
                parents[c].append(k)
        site_node = [0] * len(sites)
        for k, s in enumerate(self._site_of):
            if s >= 0:
                site_node[s] = k
        anc = []
        for k in site_node:
            seen_up, todo = {k}, [k]
            while todo:
                for p in parents[todo.pop()]:
                    if p not in seen_up:
                        seen_up.add(p)
                        todo.append(p)
            anc.append(frozenset(seen_up))
        self._ancestors = tuple(anc)
        for nd in order:
            if isinstance(nd, Var) and not 0 <= nd.i < self.dim:
                raise ValueError(f"variable x{nd.i} outside dimension {self.dim}")

    @property
    def n_sites(self) -> int:
        return len(self.operator_registry)

    @property
    def site_arities(self) -> tuple[int, ...]:
        return tuple(s.arity for s in self.operator_registry)

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"expected a point of length {self.dim}, got {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point has non-finite coordinates")
        return x

    def _check_code(self, code) -> BranchCode:
        code = tuple(int(s) for s in code)
        if len(code) != self.n_sites:
            raise ValueError(f"branch code has length {len(code)}, expected {self.n_sites}")
        for s, ar in zip(code, self.site_arities):
            if not 1 <= s <= ar:
                raise ValueError(f"selection {s} outside [1, {ar}]")
        return code

    # -- evaluation -------------------------------------------------------

    def _forward(self, x, grads=None):
        """Full pass over every node; fills ``grads`` too when a list is given."""
        nodes, kids, site_of = self._nodes, self._kids, self._site_of
        n = self.dim
        vals = [0.0] * len(nodes)
        sels = [1] * self.n_sites
        site_args: list = [None] * self.n_sites
        for k, nd in enumerate(nodes):
            ch = kids[k]
            a = [vals[c] for c in ch]
            s = site_of[k]
            if s >= 0:
                v, sel = nd.select(a)
                sels[s] = sel
                site_args[s] = (a, v)
                if grads is not None:
                    grads[k] = nd.frozen_grad(a, [grads[c] for c in ch], sel, n)
            else:
                v = nd.value(a, x)
                if grads is not None:
                    grads[k] = nd.grad(a, [grads[c] for c in ch], x, n)
            vals[k] = v
        return vals, sels, site_args

    def _dirty(self, base, code):
        changed = [s for s, (b, c) in enumerate(zip(base, code)) if b != c]
        if not changed:
            return ()
        if len(changed) == 1:
            return sorted(self._ancestors[changed[0]])
        return sorted(frozenset().union(*(self._ancestors[s] for s in changed)))

    def _reevaluate(self, x, vals, base, code, grads=None):
        """Value (and gradient) of ``code`` given a full pass made under ``base``.

        Only ancestors of sites whose selection differs are recomputed.
        """
        dirty = self._dirty(base, code)
        if not dirty:
            return vals[-1], (grads[-1] if grads is not None else None)
        nodes, kids, site_of = self._nodes, self._kids, self._site_of
        n = self.dim
        over: dict[int, float] = {}
        gover: dict[int, object] = {}
        for k in dirty:
            nd = nodes[k]
            ch = kids[k]
            if type(nd) is Add and len(ch) > 4:
                # wide sums: patch the changed terms instead of re-adding all
                v = vals[k]
                g = grads[k] if grads is not None else None
                for c in ch:
                    if c in over:
                        v += over[c] - vals[c]
                        if grads is not None:
                            g = _patch(g, grads[c], gover[c])
                over[k] = v
                if grads is not None:
                    gover[k] = g
                continue
            a = [over[c] if c in over else vals[c] for c in ch]
            s = site_of[k]
            if s >= 0:
                over[k] = nd.frozen(a, code[s])
            else:
                over[k] = nd.value(a, x)
            if grads is not None:
                ga = [gover[c] if c in gover else grads[c] for c in ch]
                if s >= 0:
                    gover[k] = nd.frozen_grad(a, ga, code[s], n)
                else:
                    gover[k] = nd.grad(a, ga, x, n)
        last = len(nodes) - 1
        v = over.get(last, vals[last])
        g = None if grads is None else gover.get(last, grads[last])
        return v, g

    def evaluate(self, x) -> EvalRecord:
        """Evaluate f(x) and record the branch taken at every operator site."""
        x = self._check_x(x)
        vals, sels, site_args = self._forward(x)
        value = vals[-1]
        if value != value:
            raise DomainError(f"{self.name or 'function'} is undefined at the given point")
        ties, margins = [], []
        for s, site in enumerate(self.operator_registry):
            a, v = site_args[s]
            tol = TAU_ACT * (1.0 + max(abs(value), abs(v) if v == v else 0.0))
            t, m = site.candidates(a, sels[s], tol)
            ties.append(tuple(t))
            margins.append(m)
        return EvalRecord(float(value), tuple(sels), tuple(margins), tuple(ties), tuple(vals))

    def active_branches(self, x, cap: int = DEFAULT_BRANCH_CAP, record: EvalRecord | None = None) -> ActiveBranches:
        """Codes whose branch value matches f(x) within the activity tolerance.

        Enumerated lazily as the cross-product of per-site tied selections,
        primary code first; at most ``cap`` codes are returned.
        """
        if cap < 1:
            raise ValueError("cap must be at least 1")
        x = self._check_x(x)
        rec = self.evaluate(x) if record is None else record
        return self._active_from_record(x, rec, cap)

    def _active_from_record(self, x, rec: EvalRecord, cap: int) -> ActiveBranches:
        if all(len(t) == 1 for t in rec.site_ties):
            return ActiveBranches((rec.primary_code,))
        tol = TAU_ACT * (1.0 + abs(rec.value))
        out = [rec.primary_code]
        exceeded = False
        vals = rec.node_values
        budget = _EXAMINE_FACTOR * cap
        for code in _tie_codes(rec.primary_code, rec.site_ties):
            budget -= 1
            if budget < 0:
                # site-level ties that do not combine into f-level ties
                exceeded = True
                break
            if vals:
                v, _ = self._reevaluate(x, vals, rec.primary_code, code)
            else:
                v = self._frozen_value(x, code)
            if v == v and abs(v - rec.value) <= tol:
                if len(out) == cap:
                    exceeded = True
                    break
                out.append(code)
        return ActiveBranches(tuple(out), exceeded)

    def _needed(self, code):
        nodes, kids, site_of = self._nodes, self._kids, self._site_of
        need = [False] * len(nodes)
        need[-1] = True
        for k in range(len(nodes) - 1, -1, -1):
            if not need[k]:
                continue
            s = site_of[k]
            ch = kids[k]
            if s >= 0:
                sel = code[s]
                if isinstance(nodes[k], Piecewise):
                    need[ch[0]] = True
                    need[ch[sel]] = True
                elif isinstance(nodes[k], (Abs, Pos)):
                    need[ch[0]] = True
                else:
                    need[ch[sel - 1]] = True
            else:
                for c in ch:
                    need[c] = True
        return need

    def _frozen_value(self, x, code):
        nodes, kids, site_of = self._nodes, self._kids, self._site_of
        need = self._needed(code)
        vals = [0.0] * len(nodes)
        for k, nd in enumerate(nodes):
            if not need[k]:
                continue
            a = [vals[c] for c in kids[k]]
            s = site_of[k]
            vals[k] = nd.frozen(a, code[s]) if s >= 0 else nd.value(a, x)
        return vals[-1]

    def branch_value(self, code, x) -> float:
        """Value of the smooth branch selected by ``code`` at x."""
        x = self._check_x(x)
        code = self._check_code(code)
        v = self._frozen_value(x, code)
        if v != v:
            raise InfeasibleBranch(f"branch {code} is not defined at the given point")
        return float(v)

    def branch_gradient(self, code, x) -> np.ndarray:
        """Exact gradient of the branch selected by ``code`` (forward mode)."""
        x = self._check_x(x)
        code = self._check_code(code)
        nodes, kids, site_of = self._nodes, self._kids, self._site_of
        n = self.dim
        need = self._needed(code)
        vals = [0.0] * len(nodes)
        grads: list = [None] * len(nodes)
        for k, nd in enumerate(nodes):
            if not need[k]:
                continue
            ch = kids[k]
            a = [vals[c] for c in ch]
            ga = [grads[c] for c in ch]
            s = site_of[k]
            if s >= 0:
                vals[k] = nd.frozen(a, code[s])
                grads[k] = nd.frozen_grad(a, ga, code[s], n)
            else:
                vals[k] = nd.value(a, x)
                grads[k] = nd.grad(a, ga, x, n)
        if vals[-1] != vals[-1]:
            raise InfeasibleBranch(f"branch {code} is not defined at the given point")
        g = grads[-1]
        if g is None:
            return np.zeros(n)
        g = np.array(g, dtype=float)
        if not np.all(np.isfinite(g)):
            raise InfeasibleBranch(f"branch {code} is not differentiable at the given point")
        return g

    def branch_gradients(self, codes, x) -> list[np.ndarray]:
        """Gradients of several branches at one point.

        One full forward pass with gradients is shared; each code then only
        recomputes the ancestors of the sites where it departs from the
        evaluation's own selections.
        """
        x = self._check_x(x)
        codes = [self._check_code(c) for c in codes]
        if len(codes) == 1:
            return [self.branch_gradient(codes[0], x)]
        grads: list = [None] * len(self._nodes)
        vals, sels, _ = self._forward(x, grads)
        base = tuple(sels)
        out = []
        for code in codes:
            v, g = self._reevaluate(x, vals, base, code, grads)
            if v != v:
                raise InfeasibleBranch(f"branch {code} is not defined at the given point")
            g = np.zeros(self.dim) if g is None else np.array(g, dtype=float)
            if not np.all(np.isfinite(g)):
                raise InfeasibleBranch(f"branch {code} is not differentiable at the given point")
            out.append(g)
        return out

    def is_feasible_branch(self, code, x) -> bool:
        x = self._check_x(x)
        code = self._check_code(code)
        v = self._frozen_value(x, code)
        return v == v

    def __call__(self, x) -> float:
        return self.evaluate(x).value

    def __repr__(self):
        return f"EncodableFunction({self.name or 'anonymous'}, dim={self.dim}, sites={self.n_sites})"
