"""Raw world state: map context, agents, environment, and route geometry."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

from .geometry import Point, Polygon, Polyline

TURN_SIGNALS = ("off", "left", "right")
DIRECTIONS = ("forward", "left", "right")
NPC_TYPES = ("bus", "car", "priorityVehicle")
LIGHT_COLORS = ("red", "yellow", "green", "black")
SIGNAL_KINDS = ("Common", "Arrow", "None")
WEATHER_KINDS = ("rain", "fog", "snow")
GEARS = ("NEUTRAL", "DRIVE", "REVERSE", "PARK", "LOW", "INVALID", "NONE")

EGO_LENGTH = 4.5


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class Lane:
    id: str
    number: int
    centerline: Polyline
    side: str = "right"
    direction: str = "forward"
    speed_limit: tuple[float, float] = (0.0, 50.0)
    successors: tuple[str, ...] = ()
    width: float = 3.5
    turn: str = "forward"


@dataclass(frozen=True)
class Stopline:
    id: str
    lane: str
    segment: tuple[Point, Point]


@dataclass(frozen=True)
class SignalHead:
    id: str
    governs_lane: str
    kind: str = "Common"
    group: str = "main"


@dataclass(frozen=True)
class LightState:
    color: str = "black"
    blinking: bool = False


@dataclass(frozen=True)
class RouteGeometry:
    """Concatenated centerline of a lane sequence with the features it meets."""

    lanes: tuple[str, ...]
    line: Polyline
    spans: tuple[tuple[str, float, float], ...]
    stoplines: tuple[float, ...]
    junctions: tuple[tuple[float, float], ...]
    crosswalks: tuple[tuple[float, float], ...]

    def lane_at(self, s: float) -> str:
        for lane_id, a, b in self.spans:
            if s < b:
                return lane_id
        return self.spans[-1][0]

    def lane_start(self, lane_id: str) -> float:
        for lid, a, _ in self.spans:
            if lid == lane_id:
                return a
        raise MapError(f"lane {lane_id!r} not on route {self.lanes}")


@dataclass(frozen=True)
class MapContext:
    lanes: tuple[Lane, ...]
    junctions: tuple[Polygon, ...] = ()
    stoplines: tuple[Stopline, ...] = ()
    crosswalks: tuple[Polygon, ...] = ()
    signal_heads: tuple[SignalHead, ...] = ()
    name: str = "map"

    @cached_property
    def _lanes(self) -> dict[str, Lane]:
        return {l.id: l for l in self.lanes}

    def lane(self, lane_id: str) -> Lane:
        try:
            return self._lanes[lane_id]
        except KeyError:
            raise MapError(f"unknown lane_id {lane_id!r}") from None

    def has_lane(self, lane_id: str) -> bool:
        return lane_id in self._lanes

    def predecessors(self, lane_id: str) -> list[str]:
        return [l.id for l in self.lanes if lane_id in l.successors]

    def head_for_lane(self, lane_id: str) -> SignalHead | None:
        for h in self.signal_heads:
            if h.governs_lane == lane_id:
                return h
        return None

    def connector(self, a: str, b: str) -> str | None:
        """Lane leading from ``a`` to ``b`` when they are not directly connected."""
        for c in self.lane(a).successors:
            if b in self.lane(c).successors:
                return c
        return None

    def expand_route(self, lane_ids) -> tuple[str, ...]:
        """Insert junction connectors between consecutive, non-adjacent lanes."""
        out: list[str] = []
        for lid in lane_ids:
            self.lane(lid)
            if out and out[-1] == lid:
                continue
            if out and lid not in self.lane(out[-1]).successors:
                c = self.connector(out[-1], lid)
                if c is None:
                    raise MapError(f"lanes {out[-1]!r} and {lid!r} are not connected")
                out.append(c)
            out.append(lid)
        return tuple(out)

    def default_route(self, lane_id: str, direction: str = "forward", max_lanes: int = 4) -> tuple[str, ...]:
        route = [lane_id]
        while len(route) < max_lanes:
            succ = self.lane(route[-1]).successors
            if not succ:
                break
            pick = next((s for s in succ if self.lane(s).turn == direction), None)
            pick = pick or next((s for s in succ if self.lane(s).turn == "forward"), succ[0])
            route.append(pick)
        return tuple(route)

    @cached_property
    def _route_cache(self) -> dict:
        return {}

    def route(self, lanes) -> RouteGeometry:
        lanes = tuple(lanes)
        hit = self._route_cache.get(lanes)
        if hit is None:
            hit = self._route_cache[lanes] = _route_geometry(self, lanes)
        return hit

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p[0] for l in self.lanes for p in l.centerline.points]
        ys = [p[1] for l in self.lanes for p in l.centerline.points]
        return min(xs), min(ys), max(xs), max(ys)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "lanes": [
                {
                    "id": l.id,
                    "number": l.number,
                    "side": l.side,
                    "direction": l.direction,
                    "turn": l.turn,
                    "width": l.width,
                    "centerline": [list(p) for p in l.centerline.points],
                    "speed_limit": {"lower": l.speed_limit[0], "upper": l.speed_limit[1]},
                    "successors": list(l.successors),
                }
                for l in self.lanes
            ],
            "junctions": [[list(p) for p in j.points] for j in self.junctions],
            "stoplines": [{"id": s.id, "lane": s.lane, "segment": [list(p) for p in s.segment]} for s in self.stoplines],
            "crosswalks": [[list(p) for p in c.points] for c in self.crosswalks],
            "signal_heads": [
                {"id": h.id, "kind": h.kind, "governs_lane": h.governs_lane, "group": h.group}
                for h in self.signal_heads
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MapContext":
        def pts(seq):
            return tuple((float(x), float(y)) for x, y in seq)

        lanes = tuple(
            Lane(
                id=str(l["id"]),
                number=int(l["number"]),
                centerline=Polyline(pts(l["centerline"])),
                side=l.get("side", "right"),
                direction=l.get("direction", "forward"),
                speed_limit=(float(l.get("speed_limit", {}).get("lower", 0.0)), float(l.get("speed_limit", {}).get("upper", 50.0))),
                successors=tuple(l.get("successors", ())),
                width=float(l.get("width", 3.5)),
                turn=l.get("turn", "forward"),
            )
            for l in data["lanes"]
        )
        m = cls(
            lanes=lanes,
            junctions=tuple(Polygon(pts(j)) for j in data.get("junctions", ())),
            stoplines=tuple(
                Stopline(str(s.get("id", i)), str(s["lane"]), pts(s["segment"]))  # type: ignore[arg-type]
                for i, s in enumerate(data.get("stoplines", ()))
            ),
            crosswalks=tuple(Polygon(pts(c)) for c in data.get("crosswalks", ())),
            signal_heads=tuple(
                SignalHead(str(h["id"]), str(h["governs_lane"]), h.get("kind", "Common"), h.get("group", "main"))
                for h in data.get("signal_heads", ())
            ),
            name=data.get("name", "map"),
        )
        m.validate()
        return m

    @classmethod
    def load(cls, path) -> "MapContext":
        return cls.from_json(json.loads(Path(path).read_text()))

    def validate(self) -> None:
        ids = [l.id for l in self.lanes]
        if len(set(ids)) != len(ids):
            raise MapError("duplicate lane ids")
        for l in self.lanes:
            for s in l.successors:
                if s not in ids:
                    raise MapError(f"lane {l.id!r} has unknown successor {s!r}")
        for s in self.stoplines:
            if s.lane not in ids:
                raise MapError(f"stopline {s.id!r} references unknown lane {s.lane!r}")
        for h in self.signal_heads:
            if h.governs_lane not in ids:
                raise MapError(f"signal head {h.id!r} governs unknown lane {h.governs_lane!r}")
            if h.kind not in SIGNAL_KINDS:
                raise MapError(f"signal head {h.id!r} has unknown kind {h.kind!r}")


def _route_geometry(m: MapContext, lanes: tuple[str, ...]) -> RouteGeometry:
    pts: list[Point] = []
    spans = []
    s0 = 0.0
    for lid in lanes:
        cl = m.lane(lid).centerline
        p = list(cl.points)
        if pts and pts[-1] == p[0]:
            p = p[1:]
        elif pts:
            s0 += _dist(pts[-1], p[0])
        pts.extend(p)
        spans.append((lid, s0, s0 + cl.length))
        s0 += cl.length
    line = Polyline(tuple(pts))
    stop_arcs = []
    for sl in m.stoplines:
        if sl.lane in lanes:
            stop_arcs.extend(line.segment_crossings(*sl.segment))
    return RouteGeometry(
        lanes=lanes,
        line=line,
        spans=tuple(spans),
        stoplines=tuple(sorted(stop_arcs)),
        junctions=tuple(sorted(sp for j in m.junctions for sp in line.polygon_entries(j))),
        crosswalks=tuple(sorted(sp for c in m.crosswalks for sp in line.polygon_entries(c))),
    )


def _dist(a: Point, b: Point) -> float:
    return ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) ** 0.5


# -- dynamic state -----------------------------------------------------------


@dataclass(frozen=True)
class EgoSignals:
    turnSignal: str = "off"
    hornOn: bool = False
    highBeamOn: bool = False
    lowBeamOn: bool = False
    fogLightOn: bool = False
    warningFlashOn: bool = False
    engineOn: bool = True
    gear: str = "DRIVE"
    direction: str = "forward"
    toManual: bool = False
    isChangingLane: bool = False
    isOverTaking: bool = False
    isTurningAround: bool = False
    brake: float = 0.0


@dataclass(frozen=True)
class Ego:
    position: Point
    heading: float
    speed: float  # km/h
    lane_id: str
    acc: float = 0.0  # m/s^2
    signals: EgoSignals = field(default_factory=EgoSignals)
    route: tuple[str, ...] = ()
    length: float = EGO_LENGTH


@dataclass(frozen=True)
class NPC:
    id: str
    position: Point
    heading: float
    speed: float  # km/h
    lane_id: str
    type: str = "car"
    direction: str = "forward"
    radius: float = 2.25


@dataclass(frozen=True)
class Pedestrian:
    id: str
    position: Point
    speed: float  # m/s
    heading: float = 0.0
    type: str = "adult"
    radius: float = 0.4


@dataclass(frozen=True)
class Obstacle:
    position: Point
    type: str = "box"
    radius: float = 0.6


@dataclass(frozen=True)
class Environment:
    weather: Mapping[str, float] = field(default_factory=lambda: {"rain": 0.0, "fog": 0.0, "snow": 0.0})
    visibility: float = 1000.0
    time_of_day: float = 720.0
    streetLightOn: bool = False


@dataclass(frozen=True)
class WorldState:
    time_step: int
    ego: Ego
    map_ctx: MapContext
    npcs: tuple[NPC, ...] = ()
    pedestrians: tuple[Pedestrian, ...] = ()
    obstacles: tuple[Obstacle, ...] = ()
    lights: Mapping[str, LightState] = field(default_factory=dict)
    environment: Environment = field(default_factory=Environment)

    def validate(self) -> None:
        if self.ego.speed < 0 or any(n.speed < 0 for n in self.npcs) or any(p.speed < 0 for p in self.pedestrians):
            raise ValueError("agent speeds must be non-negative")
        for k, v in self.environment.weather.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"weather degree {k}={v} outside [0,1]")
        self.map_ctx.lane(self.ego.lane_id)
        for n in self.npcs:
            self.map_ctx.lane(n.lane_id)

    @property
    def ego_route(self) -> tuple[str, ...]:
        if self.ego.route:
            return self.ego.route
        return self.map_ctx.default_route(self.ego.lane_id, self.ego.signals.direction)
