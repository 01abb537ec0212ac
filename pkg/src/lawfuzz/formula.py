"""Formula syntax tree for driver-oriented temporal traffic-law specifications.

All nodes are frozen dataclasses, so structural equality and hashing come for
free and formulas can be shared between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

INF = math.inf


@dataclass(frozen=True)
class Interval:
    """Closed interval of trace steps; ``hi`` may be ``math.inf``."""

    lo: int = 0
    hi: float = INF

    def __post_init__(self):
        if self.lo < 0:
            raise ValueError(f"interval lower bound must be non-negative, got {self.lo}")
        if self.hi < self.lo:
            raise ValueError(f"malformed interval [{self.lo},{self.hi}]: lo > hi")

    @property
    def is_default(self) -> bool:
        return self.lo == 0 and self.hi == INF

    def __str__(self) -> str:
        hi = "inf" if self.hi == INF else str(int(self.hi))
        return f"[{self.lo},{hi}]"


UNBOUNDED = Interval()


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class SignalRef:
    """Reference to a scene signal, e.g. ``stoplineAhead(2)`` or ``NPCAhead.speed``."""

    name: str
    arg: float | None = None
    path: tuple[str, ...] = ()

    @property
    def key(self) -> str:
        s = self.name
        if self.arg is not None:
            s += f"({format_number(self.arg)})"
        for p in self.path:
            s += "." + p
        return s

    def __str__(self) -> str:
        return self.key


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self) -> str:
        return format_number(self.value)


@dataclass(frozen=True)
class EnumLit:
    name: str

    def __str__(self) -> str:
        return self.name


Expr = Union[SignalRef, Num, EnumLit]

COMPARISON_OPS = ("==", "!=", ">", "<", ">=", "<=")


@dataclass(frozen=True)
class BoolVar:
    ref: SignalRef

    def __str__(self) -> str:
        return self.ref.key


@dataclass(frozen=True)
class Comparison:
    lhs: Expr
    op: str
    rhs: Expr

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


BoolExpr = Union[BoolVar, Comparison]


# -- formulas ----------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    expr: BoolExpr


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Always:
    interval: Interval
    arg: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    arg: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Until, Always, Eventually, Next]


class NotCoreFormError(ValueError):
    """Raised when an engine that needs implication-free input receives ``Implies``."""


def format_number(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def var(name: str) -> Atom:
    """Shorthand for a Boolean signal atom (mostly used in tests)."""
    return Atom(BoolVar(SignalRef(name)))


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Atom):
        return ()
    if isinstance(f, (Not, Always, Eventually, Next)):
        return (f.arg,)
    return (f.left, f.right)


def neg(f: Formula) -> Formula:
    """Negate ``f`` without stacking a double negation."""
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def eliminate_implications(f: Formula) -> Formula:
    """Rewrite every ``a -> b`` as ``~a | b``; nothing else changes."""
    if isinstance(f, Atom):
        return f
    if isinstance(f, Implies):
        return Or(Not(eliminate_implications(f.left)), eliminate_implications(f.right))
    if isinstance(f, Not):
        return Not(eliminate_implications(f.arg))
    if isinstance(f, And):
        return And(eliminate_implications(f.left), eliminate_implications(f.right))
    if isinstance(f, Or):
        return Or(eliminate_implications(f.left), eliminate_implications(f.right))
    if isinstance(f, Until):
        return Until(f.interval, eliminate_implications(f.left), eliminate_implications(f.right))
    if isinstance(f, Always):
        return Always(f.interval, eliminate_implications(f.arg))
    if isinstance(f, Eventually):
        return Eventually(f.interval, eliminate_implications(f.arg))
    if isinstance(f, Next):
        return Next(eliminate_implications(f.arg))
    raise TypeError(f"not a formula: {f!r}")


def remove_double_negation(f: Formula) -> Formula:
    if isinstance(f, Atom):
        return f
    if isinstance(f, Not):
        inner = remove_double_negation(f.arg)
        return inner.arg if isinstance(inner, Not) else Not(inner)
    if isinstance(f, (And, Or, Implies)):
        return type(f)(remove_double_negation(f.left), remove_double_negation(f.right))
    if isinstance(f, Until):
        return Until(f.interval, remove_double_negation(f.left), remove_double_negation(f.right))
    if isinstance(f, (Always, Eventually)):
        return type(f)(f.interval, remove_double_negation(f.arg))
    if isinstance(f, Next):
        return Next(remove_double_negation(f.arg))
    raise TypeError(f"not a formula: {f!r}")


def normalize(f: Formula) -> Formula:
    """Core form: no implications, no double negations."""
    return remove_double_negation(eliminate_implications(f))


def structural_equal(f1: Formula, f2: Formula) -> bool:
    return normalize(f1) == normalize(f2)


def is_core(f: Formula) -> bool:
    if isinstance(f, Implies):
        return False
    return all(is_core(c) for c in children(f))


def require_core(f: Formula) -> None:
    if not is_core(f):
        raise NotCoreFormError("formula contains '->'; normalize it first")


def atoms(f: Formula) -> list[BoolExpr]:
    """Distinct Boolean expressions in left-to-right order."""
    out: list[BoolExpr] = []
    seen = set()

    def walk(g):
        if isinstance(g, Atom):
            if g.expr not in seen:
                seen.add(g.expr)
                out.append(g.expr)
            return
        for c in children(g):
            walk(c)

    walk(f)
    return out


def signal_keys(f: Formula) -> set[str]:
    keys = set()
    for e in atoms(f):
        if isinstance(e, BoolVar):
            keys.add(e.ref.key)
        else:
            for side in (e.lhs, e.rhs):
                if isinstance(side, SignalRef):
                    keys.add(side.key)
    return keys


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in children(f))


def temporal_depth(f: Formula) -> int:
    d = max((temporal_depth(c) for c in children(f)), default=0)
    if isinstance(f, (Until, Always, Eventually, Next)):
        d += 1
    return d
