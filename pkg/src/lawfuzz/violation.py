"""Ways to violate (and to satisfy) a law, plus violation-coverage bookkeeping."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable

from .formula import (
    Always,
    And,
    Atom,
    Eventually,
    Formula,
    Next,
    Not,
    Or,
    Until,
    normalize,
    require_core,
)
from .parser import render_formula
from .robustness import rho
from .trace import Trace

DEFAULT_CAP = 4096


class ThetaSizeError(RuntimeError):
    def __init__(self, subformula: Formula, size: int, cap: int):
        self.subformula = subformula
        self.size = size
        self.cap = cap
        super().__init__(f"violation set for {render_formula(subformula)} would have {size} elements (cap {cap})")


def _dedup(items: Iterable[Formula]) -> tuple[Formula, ...]:
    seen: dict[Formula, Formula] = {}
    for f in items:
        seen.setdefault(normalize(f), f)
    return tuple(seen.values())


class _Enumerator:
    def __init__(self, cap: int):
        self.cap = cap
        self.memo: dict[tuple[str, Formula], tuple[Formula, ...]] = {}

    def _check(self, f: Formula, n: int) -> None:
        if n > self.cap:
            raise ThetaSizeError(f, n, self.cap)

    def _cross(self, f, xs, ys, build) -> tuple[Formula, ...]:
        self._check(f, len(xs) * len(ys))
        return _dedup(build(x, y) for x in xs for y in ys)

    def _union(self, f, xs, ys) -> tuple[Formula, ...]:
        self._check(f, len(xs) + len(ys))
        return _dedup((*xs, *ys))

    def theta(self, f: Formula) -> tuple[Formula, ...]:
        key = ("theta", f)
        if key in self.memo:
            return self.memo[key]
        if isinstance(f, Atom):
            out: tuple[Formula, ...] = (Not(f),)
        elif isinstance(f, And):
            out = self._union(f, self.theta(f.left), self.theta(f.right))
        elif isinstance(f, Or):
            out = self._cross(f, self.theta(f.left), self.theta(f.right), And)
        elif isinstance(f, Not):
            out = self.n_set(f.arg)
        elif isinstance(f, Always):
            out = _dedup(Eventually(f.interval, x) for x in self.theta(f.arg))
        elif isinstance(f, Eventually):
            out = _dedup(Always(f.interval, x) for x in self.theta(f.arg))
        elif isinstance(f, Until):
            # hold-then-fail chains first, then "both sides fail right away"
            xs = self.theta(Or(Not(f.left), f.right))
            ys = self.theta(Or(f.left, f.right))
            chains = self._cross(f, xs, ys, lambda x, y: Until(f.interval, x, y))
            both = self._cross(f, self.theta(f.left), self.theta(f.right), And)
            out = self._union(f, chains, both)
        elif isinstance(f, Next):
            out = _dedup(Next(x) for x in self.theta(f.arg))
        else:
            require_core(f)
            raise TypeError(f"not a formula: {f!r}")
        self._check(f, len(out))
        self.memo[key] = out
        return out

    def n_set(self, f: Formula) -> tuple[Formula, ...]:
        key = ("n", f)
        if key in self.memo:
            return self.memo[key]
        if isinstance(f, Atom):
            out: tuple[Formula, ...] = (f,)
        elif isinstance(f, And):
            out = self._cross(f, self.n_set(f.left), self.n_set(f.right), And)
        elif isinstance(f, Or):
            out = self._union(f, self.n_set(f.left), self.n_set(f.right))
        elif isinstance(f, Not):
            out = self.theta(f.arg)
        elif isinstance(f, Always):
            out = _dedup(Always(f.interval, x) for x in self.n_set(f.arg))
        elif isinstance(f, Eventually):
            out = _dedup(Eventually(f.interval, x) for x in self.n_set(f.arg))
        elif isinstance(f, Until):
            out = self._cross(f, self.n_set(f.left), self.n_set(f.right), lambda x, y: Until(f.interval, x, y))
        elif isinstance(f, Next):
            out = _dedup(Next(x) for x in self.n_set(f.arg))
        else:
            require_core(f)
            raise TypeError(f"not a formula: {f!r}")
        self._check(f, len(out))
        self.memo[key] = out
        return out


@dataclass(frozen=True)
class ViolationSet:
    elements: tuple[Formula, ...]
    origin: Formula

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> Formula:
        return self.elements[i]

    def to_json(self) -> list[dict]:
        return [{"index": i, "formula": render_formula(x)} for i, x in enumerate(self.elements)]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def theta(f: Formula, cap: int = DEFAULT_CAP) -> ViolationSet:
    """Enumerate the structurally distinct ways ``f`` can be violated."""
    require_core(f)
    return ViolationSet(_Enumerator(cap).theta(f), f)


def n_set(f: Formula, cap: int = DEFAULT_CAP) -> tuple[Formula, ...]:
    """Enumerate the structurally distinct ways ``f`` can be satisfied."""
    require_core(f)
    return _Enumerator(cap).n_set(f)


@dataclass(frozen=True)
class CoverageState:
    total: int
    covered: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if any(not 0 <= i < self.total for i in self.covered):
            raise ValueError("covered index outside the violation set")

    @classmethod
    def empty(cls, vs: ViolationSet) -> "CoverageState":
        return cls(len(vs))

    @property
    def uncovered(self) -> list[int]:
        return [i for i in range(self.total) if i not in self.covered]


def mark_covered(state: CoverageState, vs: ViolationSet, trace: Trace) -> tuple[CoverageState, set[int]]:
    new = {i for i in state.uncovered if rho(vs[i], trace, 0) >= 0.0}
    if not new:
        return state, set()
    return CoverageState(state.total, state.covered | new), new


def coverage(state: CoverageState) -> float:
    if state.total == 0:
        warnings.warn("law has an empty violation set; coverage defined as 1.0", RuntimeWarning, stacklevel=2)
        return 1.0
    return len(state.covered) / state.total
