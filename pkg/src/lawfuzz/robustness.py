"""Quantitative robustness of finite traces.

Every subformula is evaluated once over the whole trace into a numpy vector,
so ``rho_all(f, trace)[t]`` is the robustness at step ``t``. Temporal windows
are clipped to the trace; an empty sup is ``-inf`` and an empty inf ``+inf``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .formula import (
    INF,
    Always,
    And,
    Atom,
    BoolExpr,
    BoolVar,
    Comparison,
    EnumLit,
    Eventually,
    Formula,
    Implies,
    Interval,
    Next,
    Not,
    Num,
    Or,
    Until,
    require_core,
)
from .trace import Scene, Trace

DEFAULT_SATURATION = 1.0


class KindMismatchError(TypeError):
    """An atom compares values of different kinds (e.g. an enum with a number)."""


def _side_value(e, scene: Scene):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, EnumLit):
        return e.name
    return scene[e.key]


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def atom_robustness(mu: BoolExpr, scene: Scene, saturation: float = DEFAULT_SATURATION) -> float:
    if isinstance(mu, BoolVar):
        v = scene[mu.ref.key]
        if not isinstance(v, bool):
            raise KindMismatchError(f"signal {mu.ref.key!r} is not Boolean (got {v!r})")
        return saturation if v else -saturation
    a = _side_value(mu.lhs, scene)
    b = _side_value(mu.rhs, scene)
    if _is_num(a) and _is_num(b):
        a, b = float(a), float(b)
        if mu.op in (">", ">="):
            return a - b
        if mu.op in ("<", "<="):
            return b - a
        if mu.op == "==":
            return -abs(a - b)
        return abs(a - b)
    if isinstance(a, str) and isinstance(b, str):
        if mu.op not in ("==", "!="):
            raise KindMismatchError(f"enum comparison with {mu.op!r}")
        truth = (a == b) == (mu.op == "==")
        return saturation if truth else -saturation
    raise KindMismatchError(f"cannot compare {a!r} with {b!r} in {mu}")


def _column(e, trace: Trace):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, EnumLit):
        return e.name
    return trace.column(e.key)


def _atom_vector(mu: BoolExpr, trace: Trace, saturation: float) -> np.ndarray:
    key = ("atom", mu, saturation)
    hit = trace._cache.get(key)
    if hit is not None:
        return hit
    n = len(trace)
    if isinstance(mu, BoolVar):
        col = trace.column(mu.ref.key)
        if not all(isinstance(v, bool) for v in col):
            raise KindMismatchError(f"signal {mu.ref.key!r} is not Boolean")
        out = np.where(np.array(col, dtype=bool), saturation, -saturation)
    else:
        a, b = _column(mu.lhs, trace), _column(mu.rhs, trace)
        a_list = a if isinstance(a, list) else [a] * n
        b_list = b if isinstance(b, list) else [b] * n
        if all(_is_num(x) for x in a_list) and all(_is_num(x) for x in b_list):
            av = np.asarray(a_list, dtype=float)
            bv = np.asarray(b_list, dtype=float)
            if mu.op in (">", ">="):
                out = av - bv
            elif mu.op in ("<", "<="):
                out = bv - av
            elif mu.op == "==":
                out = -np.abs(av - bv)
            else:
                out = np.abs(av - bv)
        elif all(isinstance(x, str) for x in a_list) and all(isinstance(x, str) for x in b_list):
            if mu.op not in ("==", "!="):
                raise KindMismatchError(f"enum comparison with {mu.op!r}")
            eq = np.array([x == y for x, y in zip(a_list, b_list)], dtype=bool)
            if mu.op == "!=":
                eq = ~eq
            out = np.where(eq, saturation, -saturation)
        else:
            raise KindMismatchError(f"mixed value kinds in {mu}")
    out = out.astype(float)
    out.setflags(write=False)
    trace._cache[key] = out
    return out


def _window(x: np.ndarray, iv: Interval, reduce, empty: float) -> np.ndarray:
    """``reduce`` over ``x[t+lo : t+hi]`` (inclusive, clipped) for every ``t``."""
    n = len(x)
    lo = iv.lo
    if lo >= n:
        return np.full(n, empty)
    if iv.hi == INF or iv.hi >= n - 1:
        # suffix reduction starting at t+lo
        acc = reduce.accumulate(x[::-1])[::-1]
        out = np.full(n, empty)
        out[: n - lo] = acc[lo:]
        return out
    width = int(iv.hi) - lo + 1
    padded = np.concatenate([x[lo:], np.full(width - 1 + lo, empty)])
    return reduce.reduce(sliding_window_view(padded, width)[:n], axis=1)


def _until(r1: np.ndarray, r2: np.ndarray, iv: Interval) -> np.ndarray:
    n = len(r1)
    if iv.is_default:
        out = np.empty(n)
        nxt = -np.inf
        for t in range(n - 1, -1, -1):
            nxt = max(min(r2[t], r1[t]), min(r1[t], nxt))
            out[t] = nxt
        return out
    out = np.full(n, -np.inf)
    for t in range(n):
        a = t + iv.lo
        if a >= n:
            continue
        b = n - 1 if iv.hi == INF else min(n - 1, t + int(iv.hi))
        guard = np.minimum.accumulate(r1[t : b + 1])[a - t :]
        out[t] = np.max(np.minimum(r2[a : b + 1], guard))
    return out


def rho_all(f: Formula, trace: Trace, saturation: float = DEFAULT_SATURATION) -> np.ndarray:
    """Robustness of ``f`` at every step of ``trace``."""
    memo: dict = {}

    def go(g: Formula) -> np.ndarray:
        hit = memo.get(g)
        if hit is not None:
            return hit
        if isinstance(g, Atom):
            r = _atom_vector(g.expr, trace, saturation)
        elif isinstance(g, Not):
            r = -go(g.arg)
        elif isinstance(g, And):
            r = np.minimum(go(g.left), go(g.right))
        elif isinstance(g, Or):
            r = np.maximum(go(g.left), go(g.right))
        elif isinstance(g, Eventually):
            r = _window(go(g.arg), g.interval, np.maximum, -np.inf)
        elif isinstance(g, Always):
            r = _window(go(g.arg), g.interval, np.minimum, np.inf)
        elif isinstance(g, Until):
            r = _until(go(g.left), go(g.right), g.interval)
        elif isinstance(g, Next):
            r = np.concatenate([go(g.arg)[1:], [-np.inf]])
        elif isinstance(g, Implies):
            require_core(g)
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = r
        return r

    require_core(f)
    return go(f)


def rho(f: Formula, trace: Trace, t: int = 0, saturation: float = DEFAULT_SATURATION) -> float:
    if not 0 <= t < len(trace):
        raise IndexError(f"time step {t} outside trace of length {len(trace)}")
    return float(rho_all(f, trace, saturation)[t])


def satisfies(f: Formula, trace: Trace) -> bool:
    """Non-strict: a robustness of exactly zero counts as satisfied."""
    return rho(f, trace, 0) >= 0.0
