"""Prefix text format for expression trees.

One operator per parenthesised node::

    (fn 2 "name" (max (mul (var 0) (var 0)) (abs (linear 1.0 2.0 -1.0))))

Node forms:

    (var i)  (const c)  (linear offset c0 c1 ...)
    (add a b ...)  (neg a)  (scale c a)  (mul a b)
    (powc a p)  (pow a b)  (exp a)  (log a)
    (max a ...)  (min a ...)  (abs a)  (pos a)
    (piecewise arg (piece lo hi oo rlo rhi oc expr) ...)

In a piece the two-letter flags give open/closed ends ("o"/"c") of the
domain and of the selection rule.  Non-leaf nodes shared inside the tree
are written once as ``(let k node)`` and referenced later as ``(ref k)``,
so shared operator sites stay single sites after a round trip.
"""

from __future__ import annotations

import re

from .encoding import (
    Abs, Add, Const, EncodableFunction, Exp, Interval, Linear, Log, Max, Min,
    Mul, Neg, Node, Piece, Piecewise, Pos, Pow, PowConst, Scale, Var,
)

_TOKEN = re.compile(r'\(|\)|"(?:[^"\\]|\\.)*"|[^\s()]+')

_SIMPLE = {Add: "add", Neg: "neg", Mul: "mul", Pow: "pow", Exp: "exp", Log: "log",
           Max: "max", Min: "min", Abs: "abs", Pos: "pos"}
_BUILD = {v: k for k, v in _SIMPLE.items()}


def _num(v: float) -> str:
    return repr(float(v))


def _flags(iv: Interval) -> str:
    return ("c" if iv.lo_closed else "o") + ("c" if iv.hi_closed else "o")


def _shared(root: Node) -> set[int]:
    count: dict[int, int] = {}
    stack = [root]
    while stack:
        nd = stack.pop()
        count[id(nd)] = count.get(id(nd), 0) + 1
        if count[id(nd)] == 1:
            stack.extend(nd.children)
    return {k for k, c in count.items() if c > 1}


def node_to_text(root: Node) -> str:
    shared = _shared(root)
    labels: dict[int, int] = {}

    def emit(nd: Node) -> str:
        if id(nd) in labels:
            return f"(ref {labels[id(nd)]})"
        if isinstance(nd, Var):
            return f"(var {nd.i})"
        if isinstance(nd, Const):
            return f"(const {_num(nd.c)})"
        if isinstance(nd, Linear):
            return "(linear " + " ".join(_num(v) for v in (nd.offset, *nd.coeffs)) + ")"
        label = None
        if id(nd) in shared:
            label = labels[id(nd)] = len(labels)
        if isinstance(nd, Scale):
            body = f"(scale {_num(nd.c)} {emit(nd.children[0])})"
        elif isinstance(nd, PowConst):
            body = f"(powc {emit(nd.children[0])} {_num(nd.p)})"
        elif isinstance(nd, Piecewise):
            parts = [emit(nd.children[0])]
            for p, e in zip(nd.pieces, nd.children[1:]):
                d, r = p.domain, p.rule
                parts.append(
                    f"(piece {_num(d.lo)} {_num(d.hi)} {_flags(d)} "
                    f"{_num(r.lo)} {_num(r.hi)} {_flags(r)} {emit(e)})"
                )
            body = "(piecewise " + " ".join(parts) + ")"
        elif type(nd) in _SIMPLE:
            body = "(" + " ".join([_SIMPLE[type(nd)]] + [emit(c) for c in nd.children]) + ")"
        else:
            raise TypeError(f"no text form for {type(nd).__name__}")
        return body if label is None else f"(let {label} {body})"

    return emit(root)


def to_text(f: EncodableFunction) -> str:
    name = (f.name or "").replace("\\", "\\\\").replace('"', '\\"')
    return f'(fn {f.dim} "{name}" {node_to_text(f.root)})'


def _parse(text: str):
    toks = _TOKEN.findall(text)
    pos = 0

    def walk():
        nonlocal pos
        if pos >= len(toks):
            raise ValueError("unexpected end of input")
        t = toks[pos]
        pos += 1
        if t == ")":
            raise ValueError("unexpected ')'")
        if t != "(":
            return t
        out = []
        while True:
            if pos >= len(toks):
                raise ValueError("unbalanced '('")
            if toks[pos] == ")":
                pos += 1
                return out
            out.append(walk())

    tree = walk()
    if pos != len(toks):
        raise ValueError("trailing tokens after expression")
    return tree


def _interval(lo, hi, flags) -> Interval:
    if len(flags) != 2 or set(flags) - {"o", "c"}:
        raise ValueError(f"bad interval flags {flags!r}")
    return Interval(float(lo), float(hi), flags[0] == "c", flags[1] == "c")


def _build(sx, env: dict) -> Node:
    if not isinstance(sx, list) or not sx:
        raise ValueError(f"expected a node, got {sx!r}")
    head, args = sx[0], sx[1:]
    if head == "let":
        nd = _build(args[1], env)
        env[int(args[0])] = nd
        return nd
    if head == "ref":
        return env[int(args[0])]
    if head == "var":
        return Var(int(args[0]))
    if head == "const":
        return Const(float(args[0]))
    if head == "linear":
        return Linear([float(a) for a in args[1:]], float(args[0]))
    if head == "scale":
        return Scale(float(args[0]), _build(args[1], env))
    if head == "powc":
        return PowConst(_build(args[0], env), float(args[1]))
    if head == "piecewise":
        arg = _build(args[0], env)
        pieces = []
        for p in args[1:]:
            if not isinstance(p, list) or p[0] != "piece" or len(p) != 8:
                raise ValueError("malformed piece")
            pieces.append(Piece(_build(p[7], env), _interval(*p[1:4]), _interval(*p[4:7])))
        return Piecewise(arg, pieces)
    if head in _BUILD:
        kids = [_build(a, env) for a in args]
        if head == "add":
            # build without re-flattening so the tree shape round-trips
            nd = Add()
            nd.children = tuple(kids)
            return nd
        return _BUILD[head](*kids)
    raise ValueError(f"unknown node type {head!r}")


def node_from_text(text: str) -> Node:
    return _build(_parse(text), {})


def from_text(text: str) -> EncodableFunction:
    sx = _parse(text)
    if not isinstance(sx, list) or len(sx) != 4 or sx[0] != "fn":
        raise ValueError("expected (fn dim \"name\" node)")
    name = sx[2]
    if not (name.startswith('"') and name.endswith('"')):
        raise ValueError("function name must be a quoted string")
    name = re.sub(r"\\(.)", r"\1", name[1:-1]) or None
    return EncodableFunction(_build(sx[3], {}), int(sx[1]), name)
