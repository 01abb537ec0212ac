"""Scenes, traces, and their JSON Lines serialization."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .formula import SignalRef
from .signals import DEFAULT_REGISTRY, DEFAULT_SIGNAL_CONFIG, EvalContext, Registry, SignalConfig, Value
from .world import WorldState

_KEY_RE = re.compile(r"^([A-Za-z_]\w*)(?:\(([-+0-9.eE]+)\))?((?:\.[A-Za-z_]\w*)*)$")


class TraceFormatError(ValueError):
    pass


def parse_key(key: str) -> SignalRef:
    """``"stoplineAhead(2)"`` -> ``SignalRef("stoplineAhead", 2.0)``."""
    m = _KEY_RE.match(key.strip())
    if not m:
        raise ValueError(f"malformed signal key {key!r}")
    name, arg, path = m.groups()
    return SignalRef(name, float(arg) if arg is not None else None, tuple(p for p in path.split(".") if p))


class Scene(Mapping[str, Value]):
    """Valuation of signal keys at one time step."""

    __slots__ = ("_v",)

    def __init__(self, valuation: Mapping[str, Value]):
        self._v = dict(valuation)

    def __getitem__(self, key: str) -> Value:
        try:
            return self._v[key]
        except KeyError:
            raise KeyError(f"signal {key!r} missing from scene") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._v)

    def __len__(self) -> int:
        return len(self._v)

    def __repr__(self) -> str:
        return f"Scene({self._v!r})"


class Trace(Sequence[Scene]):
    """Non-empty sequence of scenes at uniform step spacing."""

    def __init__(self, scenes: Iterable[Scene | Mapping[str, Value]]):
        self.scenes = tuple(s if isinstance(s, Scene) else Scene(s) for s in scenes)
        if not self.scenes:
            raise ValueError("a trace needs at least one scene")
        self._cache: dict = {}

    def __getitem__(self, i):
        return self.scenes[i]

    def __len__(self) -> int:
        return len(self.scenes)

    def column(self, key: str) -> list[Value]:
        return [s[key] for s in self.scenes]

    @classmethod
    def from_columns(cls, **columns: Sequence[Value]) -> "Trace":
        """Build a trace from equal-length per-signal columns (handy in tests)."""
        keys = list(columns)
        n = len(columns[keys[0]])
        if any(len(columns[k]) != n for k in keys):
            raise ValueError("columns differ in length")
        return cls({k: columns[k][i] for k in keys} for i in range(n))

    # -- JSONL -------------------------------------------------------------

    def to_jsonl(self) -> str:
        lines = []
        for t, s in enumerate(self.scenes):
            lines.append(json.dumps({"t": t, "signals": {k: s[k] for k in sorted(s)}}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        scenes = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise TraceFormatError(f"line {lineno}: {e}") from None
            if not isinstance(rec, dict) or not isinstance(rec.get("signals"), dict) or not isinstance(rec.get("t"), int):
                raise TraceFormatError(f"line {lineno}: expected {{\"t\": int, \"signals\": {{...}}}}")
            if rec["t"] != len(scenes):
                raise TraceFormatError(f"line {lineno}: expected t={len(scenes)}, got {rec['t']}")
            for k, v in rec["signals"].items():
                if not isinstance(v, (bool, int, float, str)):
                    raise TraceFormatError(f"line {lineno}: signal {k!r} has unsupported value {v!r}")
            scenes.append(Scene({k: (float(v) if isinstance(v, int) and not isinstance(v, bool) else v) for k, v in rec["signals"].items()}))
        if not scenes:
            raise TraceFormatError("empty trace")
        return cls(scenes)

    @classmethod
    def read(cls, path) -> "Trace":
        return cls.from_jsonl(Path(path).read_text())


def evaluate_signals(
    w: WorldState,
    needed: Iterable[str | SignalRef],
    registry: Registry = DEFAULT_REGISTRY,
    cfg: SignalConfig = DEFAULT_SIGNAL_CONFIG,
) -> Scene:
    ctx = EvalContext(w, cfg)
    out = {}
    for k in needed:
        ref = k if isinstance(k, SignalRef) else parse_key(k)
        v = registry.evaluate(ref, ctx)
        out[ref.key] = float(v) if isinstance(v, int) and not isinstance(v, bool) else v
    return Scene(out)


def trace_from_states(
    states: Sequence[WorldState],
    needed: Iterable[str | SignalRef],
    registry: Registry = DEFAULT_REGISTRY,
    cfg: SignalConfig = DEFAULT_SIGNAL_CONFIG,
) -> Trace:
    if not states:
        raise ValueError("cannot build a trace from zero world states")
    refs = [k if isinstance(k, SignalRef) else parse_key(k) for k in needed]
    for r in refs:
        registry.lookup(r)
    return Trace(evaluate_signals(w, refs, registry, cfg) for w in states)
