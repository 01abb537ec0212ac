"""Reference evaluators written straight from the textbook definitions.

They share no code with ``lawfuzz.robustness``: every operator is a plain
loop over explicit index sets, so a disagreement points at the fast engine.
"""

from __future__ import annotations

import math
import operator

from hypothesis import strategies as st

from lawfuzz.formula import (
    INF,
    And,
    Always,
    Atom,
    BoolVar,
    Comparison,
    EnumLit,
    Eventually,
    Implies,
    Interval,
    Next,
    Not,
    Num,
    Or,
    SignalRef,
    Until,
)
from lawfuzz.trace import Trace

_CMP = {">": operator.gt, ">=": operator.ge, "<": operator.lt, "<=": operator.le, "==": operator.eq, "!=": operator.ne}


def _value(e, scene):
    if isinstance(e, SignalRef):
        return scene[e.key]
    if isinstance(e, Num):
        return e.value
    if isinstance(e, EnumLit):
        return e.name
    raise TypeError(e)


def _window(iv: Interval, t: int, n: int) -> range:
    hi = n - 1 if iv.hi == INF else min(n - 1, t + int(iv.hi))
    return range(t + iv.lo, hi + 1)


def holds(f, trace: Trace, t: int = 0) -> bool:
    """Boolean satisfaction on a finite trace, windows clipped to the trace."""
    n = len(trace)
    if isinstance(f, Atom):
        x = f.expr
        if isinstance(x, BoolVar):
            return bool(trace[t][x.ref.key])
        return _CMP[x.op](_value(x.lhs, trace[t]), _value(x.rhs, trace[t]))
    if isinstance(f, Not):
        return not holds(f.arg, trace, t)
    if isinstance(f, And):
        return holds(f.left, trace, t) and holds(f.right, trace, t)
    if isinstance(f, Or):
        return holds(f.left, trace, t) or holds(f.right, trace, t)
    if isinstance(f, Implies):
        return (not holds(f.left, trace, t)) or holds(f.right, trace, t)
    if isinstance(f, Next):
        return t + 1 < n and holds(f.arg, trace, t + 1)
    if isinstance(f, Eventually):
        return any(holds(f.arg, trace, u) for u in _window(f.interval, t, n))
    if isinstance(f, Always):
        return all(holds(f.arg, trace, u) for u in _window(f.interval, t, n))
    if isinstance(f, Until):
        return any(
            holds(f.right, trace, u) and all(holds(f.left, trace, v) for v in range(t, u + 1))
            for u in _window(f.interval, t, n)
        )
    raise TypeError(f)


def robustness(f, trace: Trace, t: int = 0, saturation: float = 1.0) -> float:
    """Quantitative semantics by brute force over every index set."""
    n = len(trace)
    B = saturation
    if isinstance(f, Atom):
        x = f.expr
        if isinstance(x, BoolVar):
            return B if trace[t][x.ref.key] else -B
        a, b = _value(x.lhs, trace[t]), _value(x.rhs, trace[t])
        if isinstance(a, str) or isinstance(b, str):
            same = a == b
            return (B if same else -B) if x.op == "==" else (-B if same else B)
        if x.op in (">", ">="):
            return a - b
        if x.op in ("<", "<="):
            return b - a
        return -abs(a - b) if x.op == "==" else abs(a - b)
    if isinstance(f, Not):
        return -robustness(f.arg, trace, t, B)
    if isinstance(f, And):
        return min(robustness(f.left, trace, t, B), robustness(f.right, trace, t, B))
    if isinstance(f, Or):
        return max(robustness(f.left, trace, t, B), robustness(f.right, trace, t, B))
    if isinstance(f, Next):
        return robustness(f.arg, trace, t + 1, B) if t + 1 < n else -math.inf
    if isinstance(f, Eventually):
        return max((robustness(f.arg, trace, u, B) for u in _window(f.interval, t, n)), default=-math.inf)
    if isinstance(f, Always):
        return min((robustness(f.arg, trace, u, B) for u in _window(f.interval, t, n)), default=math.inf)
    if isinstance(f, Until):
        best = -math.inf
        for u in _window(f.interval, t, n):
            inner = min(robustness(f.left, trace, v, B) for v in range(t, u + 1))
            best = max(best, min(robustness(f.right, trace, u, B), inner))
        return best
    raise TypeError(f)


# -- hypothesis strategies ---------------------------------------------------

A = Atom(BoolVar(SignalRef("a")))
B_ = Atom(BoolVar(SignalRef("b")))


def numeric_atom(op: str, c: float) -> Atom:
    return Atom(Comparison(SignalRef("x"), op, Num(c)))


intervals = st.one_of(
    st.just(Interval()),
    st.tuples(st.integers(0, 3), st.integers(0, 3)).map(lambda p: Interval(min(p), max(p))),
    st.integers(0, 3).map(lambda lo: Interval(lo, INF)),
)


@st.composite
def atom_pools(draw):
    op = draw(st.sampled_from(sorted(_CMP)))
    c = draw(st.sampled_from([-0.5, 0.0, 0.25, 0.5, 1.0]))
    return (A, B_, numeric_atom(op, c))


def formulas(pool, max_temporal: int = 3, max_size: int = 4):
    """Formulas over ``pool`` with at most ``max_temporal`` nested temporal operators."""

    def build(temporal_left: int, budget: int):
        leaf = st.sampled_from(pool)
        if budget <= 0:
            return leaf
        sub = build(temporal_left, budget - 1)
        options = [
            leaf,
            sub.map(Not),
            st.tuples(sub, sub).map(lambda p: And(*p)),
            st.tuples(sub, sub).map(lambda p: Or(*p)),
            st.tuples(sub, sub).map(lambda p: Implies(*p)),
        ]
        if temporal_left > 0:
            tsub = build(temporal_left - 1, budget - 1)
            options += [
                st.tuples(intervals, tsub).map(lambda p: Always(*p)),
                st.tuples(intervals, tsub).map(lambda p: Eventually(*p)),
                tsub.map(Next),
                st.tuples(intervals, tsub, tsub).map(lambda p: Until(*p)),
            ]
        return st.one_of(options)

    return build(max_temporal, max_size)


@st.composite
def traces(draw, min_len: int = 1, max_len: int = 5):
    n = draw(st.integers(min_len, max_len))
    xs = st.floats(-2.0, 2.0, allow_nan=False).map(lambda v: round(v, 3))
    return Trace.from_columns(
        a=[draw(st.booleans()) for _ in range(n)],
        b=[draw(st.booleans()) for _ in range(n)],
        x=[draw(xs) for _ in range(n)],
    )


@st.composite
def formula_trace_pairs(draw, max_temporal: int = 3):
    pool = draw(atom_pools())
    return draw(formulas(pool, max_temporal)), draw(traces())


# -- plain generators for bulk sampling --------------------------------------
# hypothesis shrinks well but is slow past a few hundred examples; the
# acceptance checks want tens of thousands of pairs, so they draw from here.


def random_interval(rng) -> Interval:
    kind = rng.randrange(3)
    if kind == 0:
        return Interval()
    lo = rng.randrange(4)
    return Interval(lo, INF) if kind == 1 else Interval(lo, lo + rng.randrange(4))


def random_formula(rng, pool, max_temporal: int = 3, budget: int = 4):
    if budget <= 0 or rng.random() < 0.2:
        return rng.choice(pool)
    sub = lambda: random_formula(rng, pool, max_temporal, budget - 1)  # noqa: E731
    tsub = lambda: random_formula(rng, pool, max_temporal - 1, budget - 1)  # noqa: E731
    ops = ["not", "and", "or", "implies"] + (["G", "F", "X", "U"] if max_temporal > 0 else [])
    op = rng.choice(ops)
    if op == "not":
        return Not(sub())
    if op in ("and", "or", "implies"):
        return {"and": And, "or": Or, "implies": Implies}[op](sub(), sub())
    if op == "G":
        return Always(random_interval(rng), tsub())
    if op == "F":
        return Eventually(random_interval(rng), tsub())
    if op == "X":
        return Next(tsub())
    return Until(random_interval(rng), tsub(), tsub())


def random_pool(rng):
    op = rng.choice(sorted(_CMP))
    return (A, B_, numeric_atom(op, rng.choice([-0.5, 0.0, 0.25, 0.5, 1.0])))


def random_trace(rng, max_len: int = 5) -> Trace:
    n = rng.randint(1, max_len)
    return Trace.from_columns(
        a=[rng.random() < 0.5 for _ in range(n)],
        b=[rng.random() < 0.5 for _ in range(n)],
        x=[round(rng.uniform(-2.0, 2.0), 3) for _ in range(n)],
    )
