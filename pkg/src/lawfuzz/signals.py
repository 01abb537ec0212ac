"""Driver-oriented signal registry and evaluators.

Each registry entry maps a key pattern such as ``stoplineAhead(n)`` or
``trafficLightAhead.color`` to its value kind and an evaluator over a
:class:`~lawfuzz.world.WorldState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

from .formula import SignalRef
from .geometry import angle_diff, in_area_ahead, to_local
from .world import (
    DIRECTIONS,
    GEARS,
    LIGHT_COLORS,
    NPC,
    NPC_TYPES,
    SIGNAL_KINDS,
    TURN_SIGNALS,
    LightState,
    WorldState,
)

Value = float | bool | str


class UnknownSignalError(KeyError):
    def __str__(self):
        return f"unknown signal {self.args[0]!r}"


@dataclass(frozen=True)
class SignalConfig:
    """Geometry constants behind the derived signals."""

    ped_area_length: float = 5.0
    npc_area_length: float = 10.0
    area_width: float = 3.5
    sector_half_angle: float = 45.0  # degrees
    crosswalk_proximity: float = 2.0
    jam_count: int = 3
    jam_distance: float = 30.0
    jam_speed: float = 5.0  # km/h
    driver_side: str = "l"


DEFAULT_SIGNAL_CONFIG = SignalConfig()


@dataclass(frozen=True)
class SignalSpec:
    pattern: str
    kind: str  # "number" | "bool" | "enum"
    domain: tuple[str, ...] = ()
    evaluator: Callable | None = field(default=None, compare=False, repr=False)


def pattern_of(ref: SignalRef) -> str:
    p = ref.name + ("(n)" if ref.arg is not None else "")
    return p + "".join("." + x for x in ref.path)


class Registry:
    def __init__(self, specs: Iterable[SignalSpec] = (), aliases: dict[str, str] | None = None):
        self._specs = {s.pattern: s for s in specs}
        self._aliases = dict(aliases or {})

    def add(self, spec: SignalSpec) -> None:
        self._specs[spec.pattern] = spec

    def _canon(self, ref: SignalRef) -> SignalRef:
        name = self._aliases.get(ref.name, ref.name)
        return ref if name == ref.name else SignalRef(name, ref.arg, ref.path)

    def lookup(self, ref: SignalRef) -> SignalSpec:
        spec = self._specs.get(pattern_of(self._canon(ref)))
        if spec is None:
            raise UnknownSignalError(ref.key)
        return spec

    def knows_name(self, name: str) -> bool:
        name = self._aliases.get(name, name)
        return any(p == name or p.startswith(name + "(") or p.startswith(name + ".") for p in self._specs)

    def patterns(self) -> list[str]:
        return sorted(self._specs)

    def evaluate(self, ref: SignalRef, ctx: "EvalContext") -> Value:
        spec = self.lookup(ref)
        if spec.evaluator is None:
            raise UnknownSignalError(ref.key)
        return spec.evaluator(ctx, ref.arg)


class FreeRegistry(Registry):
    """Accepts any bare identifier as a Boolean proposition (for abstract formulas)."""

    def lookup(self, ref: SignalRef) -> SignalSpec:
        try:
            return super().lookup(ref)
        except UnknownSignalError:
            return SignalSpec(pattern_of(ref), "bool")

    def knows_name(self, name: str) -> bool:
        return True

    @classmethod
    def extending(cls, base: Registry) -> "FreeRegistry":
        """Known signals keep their kinds; anything else becomes a proposition."""
        return cls(base._specs.values(), base._aliases)


# -- evaluation context ------------------------------------------------------


class EvalContext:
    """Per-WorldState cache of the geometry shared by many signals."""

    def __init__(self, w: WorldState, cfg: SignalConfig = DEFAULT_SIGNAL_CONFIG):
        self.w = w
        self.cfg = cfg

    @cached_property
    def route(self):
        m = self.w.map_ctx
        lanes = self.w.ego_route
        if self.w.ego.lane_id not in lanes:
            lanes = m.default_route(self.w.ego.lane_id, self.w.ego.signals.direction)
        return m.route(lanes)

    @cached_property
    def arc(self) -> float:
        return self.route.line.project(self.w.ego.position)[0]

    @property
    def front(self) -> float:
        return self.arc + self.w.ego.length / 2

    @property
    def rear(self) -> float:
        return self.arc - self.w.ego.length / 2

    @cached_property
    def bumper(self):
        e = self.w.ego
        h = e.heading
        return (e.position[0] + math.cos(h) * e.length / 2, e.position[1] + math.sin(h) * e.length / 2)

    def feature_ahead(self, arcs: Iterable[float], n: float) -> bool:
        """A feature lies between the rear bumper and ``n`` metres past the front bumper."""
        lo, hi = self.rear, self.front + n
        return any(lo <= a <= hi for a in arcs)

    @cached_property
    def lane(self):
        return self.w.map_ctx.lane(self.w.ego.lane_id)

    @cached_property
    def signal_head(self):
        m = self.w.map_ctx
        lanes = self.route.lanes
        i = lanes.index(self.w.ego.lane_id) if self.w.ego.lane_id in lanes else 0
        if self.lane.number == 0 and i > 0:
            h = m.head_for_lane(lanes[i - 1])
            if h is not None:
                return h
        for lid in lanes[i:]:
            h = m.head_for_lane(lid)
            if h is not None:
                return h
        return None

    @cached_property
    def light(self) -> LightState:
        h = self.signal_head
        if h is None:
            return LightState("black", False)
        return self.w.lights.get(h.id, LightState("black", False))

    @cached_property
    def npc_polar(self) -> list[tuple[NPC, float, float]]:
        """(npc, distance, relative bearing in degrees) for each NPC."""
        e = self.w.ego
        out = []
        for n in self.w.npcs:
            fx, fy = to_local(e.position, e.heading, n.position)
            out.append((n, math.hypot(fx, fy), math.degrees(math.atan2(fy, fx))))
        return out

    def sector(self, which: str) -> NPC | None:
        half = self.cfg.sector_half_angle
        best = None
        best_d = math.inf
        e = self.w.ego
        for n, d, b in self.npc_polar:
            if which == "ahead":
                ok = abs(b) <= half
            elif which == "back":
                ok = abs(b) >= 180 - half
            elif which == "left":
                ok = 90 - half < b < 90 + half
            elif which == "right":
                ok = -90 - half < b < -90 + half
            elif which == "opposite":
                ok = abs(b) <= 90 and abs(angle_diff(n.heading, e.heading)) > math.radians(135)
            else:
                ok = True
            if ok and d < best_d:
                best, best_d = n, d
        return best

    def distance_to(self, n: NPC) -> float:
        e = self.w.ego
        return math.hypot(n.position[0] - e.position[0], n.position[1] - e.position[1])


# -- derived signals ---------------------------------------------------------


def priority_peds_ahead(w: WorldState, cfg: SignalConfig = DEFAULT_SIGNAL_CONFIG, ctx: EvalContext | None = None) -> bool:
    """Pedestrian in the area ahead who is likely to cross (close to a crosswalk)."""
    ctx = ctx or EvalContext(w, cfg)
    bumper = ctx.bumper
    h = w.ego.heading
    for p in w.pedestrians:
        if not in_area_ahead(bumper, h, p.position, cfg.ped_area_length, cfg.area_width):
            continue
        if math.hypot(p.position[0] - bumper[0], p.position[1] - bumper[1]) > cfg.ped_area_length:
            continue
        if any(c.distance(p.position) <= cfg.crosswalk_proximity for c in w.map_ctx.crosswalks):
            return True
    return False


def priority_npc_ahead(
    w: WorldState, driver_side: str | None = None, cfg: SignalConfig = DEFAULT_SIGNAL_CONFIG, ctx: EvalContext | None = None
) -> bool:
    """NPC in the area ahead that has right of way over the ego.

    Rules: the NPC is a priority vehicle; or the ego is turning and the NPC goes
    straight through the junction; or the junction is uncontrolled and the NPC
    approaches from the priority side (``l`` driver position: from the right).
    """
    ctx = ctx or EvalContext(w, cfg)
    side = driver_side or cfg.driver_side
    e = w.ego
    bumper = ctx.bumper
    near_junction = None
    for n in w.npcs:
        if not in_area_ahead(bumper, e.heading, n.position, cfg.npc_area_length, cfg.area_width):
            continue
        if n.type == "priorityVehicle":
            return True
        if near_junction is None:
            near_junction = ctx.lane.number == 0 or ctx.feature_ahead((a for a, _ in ctx.route.junctions), cfg.npc_area_length)
        if not near_junction:
            continue
        in_junction = w.map_ctx.lane(n.lane_id).number == 0 or any(j.contains(n.position) for j in w.map_ctx.junctions)
        if e.signals.direction != "forward" and n.direction == "forward" and in_junction:
            return True
        if ctx.signal_head is None:
            rel = math.degrees(angle_diff(n.heading, e.heading))
            if side == "l" and 45 < rel < 135:
                return True
            if side == "r" and -135 < rel < -45:
                return True
    return False


def is_traffic_jam(ctx: EvalContext) -> bool:
    cfg = ctx.cfg
    half = cfg.sector_half_angle
    slow = [n for n, d, b in ctx.npc_polar if abs(b) <= half and d <= cfg.jam_distance and n.speed < cfg.jam_speed]
    return len(slow) >= cfg.jam_count


# -- the registry table ------------------------------------------------------


def _ego(attr):
    return lambda ctx, arg: getattr(ctx.w.ego, attr)


def _ego_sig(attr):
    return lambda ctx, arg: getattr(ctx.w.ego.signals, attr)


def _npc_specs(name: str, sector: str) -> list[SignalSpec]:
    def pick(ctx):
        return ctx.sector(sector)

    def within(ctx, n):
        npc = pick(ctx)
        return npc is not None and ctx.distance_to(npc) <= n

    return [
        SignalSpec(f"{name}(n)", "bool", evaluator=within),
        SignalSpec(f"{name}.speed", "number", evaluator=lambda ctx, a: (pick(ctx).speed if pick(ctx) else 0.0)),
        SignalSpec(f"{name}.type", "enum", NPC_TYPES + ("None",), evaluator=lambda ctx, a: (pick(ctx).type if pick(ctx) else "None")),
        SignalSpec(
            f"{name}.direction", "enum", DIRECTIONS, evaluator=lambda ctx, a: (pick(ctx).direction if pick(ctx) else "forward")
        ),
    ]


def _build_default() -> Registry:
    specs = [
        SignalSpec("speed", "number", evaluator=_ego("speed")),
        SignalSpec("acc", "number", evaluator=_ego("acc")),
        SignalSpec("brake", "number", evaluator=_ego_sig("brake")),
        SignalSpec("turnSignal", "enum", TURN_SIGNALS, evaluator=_ego_sig("turnSignal")),
        SignalSpec("gear", "enum", GEARS, evaluator=_ego_sig("gear")),
        SignalSpec("direction", "enum", DIRECTIONS, evaluator=_ego_sig("direction")),
    ]
    for b in (
        "hornOn",
        "highBeamOn",
        "lowBeamOn",
        "fogLightOn",
        "warningFlashOn",
        "engineOn",
        "toManual",
        "isChangingLane",
        "isOverTaking",
        "isTurningAround",
    ):
        specs.append(SignalSpec(b, "bool", evaluator=_ego_sig(b)))
    specs += [
        SignalSpec("currentLane.number", "number", evaluator=lambda ctx, a: float(ctx.lane.number)),
        SignalSpec("currentLane.side", "enum", ("left", "right"), evaluator=lambda ctx, a: ctx.lane.side),
        SignalSpec(
            "currentLane.direction",
            "enum",
            ("forward", "left", "right", "UTurn", "forwardOrLeft", "forwardOrRight"),
            evaluator=lambda ctx, a: ctx.lane.direction,
        ),
        SignalSpec("speedLimit.lowerLimit", "number", evaluator=lambda ctx, a: ctx.lane.speed_limit[0]),
        SignalSpec("speedLimit.upperLimit", "number", evaluator=lambda ctx, a: ctx.lane.speed_limit[1]),
        SignalSpec("streetLightOn", "bool", evaluator=lambda ctx, a: ctx.w.environment.streetLightOn),
        SignalSpec("honkingAllowed", "bool", evaluator=lambda ctx, a: True),
        SignalSpec("stoplineAhead(n)", "bool", evaluator=lambda ctx, n: ctx.feature_ahead(ctx.route.stoplines, n)),
        SignalSpec(
            "junctionAhead(n)", "bool", evaluator=lambda ctx, n: ctx.feature_ahead((a for a, _ in ctx.route.junctions), n)
        ),
        SignalSpec(
            "crosswalkAhead(n)", "bool", evaluator=lambda ctx, n: ctx.feature_ahead((a for a, _ in ctx.route.crosswalks), n)
        ),
        # no sign features on the bundled maps
        SignalSpec("stopSignAhead(n)", "bool", evaluator=lambda ctx, n: False),
        SignalSpec("noUTurnSignAhead(n)", "bool", evaluator=lambda ctx, n: False),
        SignalSpec(
            "signalAhead", "enum", SIGNAL_KINDS, evaluator=lambda ctx, a: ctx.signal_head.kind if ctx.signal_head else "None"
        ),
        SignalSpec("trafficLightAhead.color", "enum", LIGHT_COLORS, evaluator=lambda ctx, a: ctx.light.color),
        SignalSpec("trafficLightAhead.isBlinking", "bool", evaluator=lambda ctx, a: ctx.light.blinking),
        SignalSpec("trafficLightAhead.blink", "bool", evaluator=lambda ctx, a: ctx.light.blinking),
        SignalSpec("PriorityNPCAhead", "bool", evaluator=lambda ctx, a: priority_npc_ahead(ctx.w, cfg=ctx.cfg, ctx=ctx)),
        SignalSpec("PriorityPedsAhead", "bool", evaluator=lambda ctx, a: priority_peds_ahead(ctx.w, ctx.cfg, ctx)),
        SignalSpec("isTrafficJam", "bool", evaluator=lambda ctx, a: is_traffic_jam(ctx)),
        SignalSpec("time", "number", evaluator=lambda ctx, a: ctx.w.environment.time_of_day),
        SignalSpec("weather.visibility", "number", evaluator=lambda ctx, a: ctx.w.environment.visibility),
    ]
    for k in ("rain", "fog", "snow"):
        specs.append(SignalSpec(f"weather.{k}", "number", evaluator=lambda ctx, a, k=k: ctx.w.environment.weather.get(k, 0.0)))
    for name, sector in (
        ("NPCAhead", "ahead"),
        ("NPCBack", "back"),
        ("NPCLeft", "left"),
        ("NPCRight", "right"),
        ("NPCOpposite", "opposite"),
        ("NearestNPC", "any"),
    ):
        specs += _npc_specs(name, sector)
    return Registry(specs, aliases={"nearestNPC": "NearestNPC", "NPCALeft": "NPCLeft"})


DEFAULT_REGISTRY = _build_default()
