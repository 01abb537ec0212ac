"""Scenario genomes and the templates that bound them.

A template fixes the scenario's structure (how many agents, which lanes each
NPC drives through) and the valid range of every operable parameter. A genome
is one point in that space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..world import NPC_TYPES, WEATHER_KINDS, MapContext

Range = tuple[float, float]
Box = tuple[Range, Range]

VEHICLE_SPEED_RANGE: Range = (0.0, 120.0)
PED_SPEED_RANGE: Range = (0.0, 3.0)
PED_TYPES = ("adult", "child")
OBSTACLE_TYPES = ("box", "cone", "debris")


class GenomeError(ValueError):
    """Genome inconsistent with its template or map; ``path`` names the offending field."""

    def __init__(self, path: str, msg: str):
        self.path = path
        super().__init__(f"{path}: {msg}")


class TemplateMismatchError(ValueError):
    pass


# -- genome ------------------------------------------------------------------


@dataclass(frozen=True)
class Waypoint:
    lane_id: str
    offset: float
    speed: float  # km/h


@dataclass(frozen=True)
class PedPoint:
    position: tuple[float, float]
    speed: float  # m/s


@dataclass(frozen=True)
class ObstacleGene:
    position: tuple[float, float]
    type: str = "box"


@dataclass(frozen=True)
class ScenarioGenome:
    ego_lane: str
    ego_offset: float
    ego_route: tuple[str, ...]
    npc_tracks: tuple[tuple[Waypoint, ...], ...] = ()
    npc_types: tuple[str, ...] = ()
    pedestrian_tracks: tuple[tuple[PedPoint, ...], ...] = ()
    pedestrian_types: tuple[str, ...] = ()
    obstacles: tuple[ObstacleGene, ...] = ()
    time_of_day: float = 720.0
    weather: Mapping[str, float] = field(default_factory=lambda: {k: 0.0 for k in WEATHER_KINDS})
    light_phase_offset: float = 0.0
    template: str = ""

    def to_json(self) -> dict:
        return {
            "template": self.template,
            "ego_start": {"lane_id": self.ego_lane, "offset": self.ego_offset},
            "ego_route": list(self.ego_route),
            "npc_tracks": [
                [{"lane_id": w.lane_id, "offset": w.offset, "speed": w.speed} for w in track] for track in self.npc_tracks
            ],
            "npc_types": list(self.npc_types),
            "pedestrian_tracks": [
                [{"position": list(p.position), "speed": p.speed} for p in track] for track in self.pedestrian_tracks
            ],
            "pedestrian_types": list(self.pedestrian_types),
            "obstacles": [{"position": list(o.position), "type": o.type} for o in self.obstacles],
            "time_of_day": self.time_of_day,
            "weather": {k: self.weather[k] for k in sorted(self.weather)},
            "light_phase_offset": self.light_phase_offset,
        }

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "ScenarioGenome":
        try:
            return cls(
                ego_lane=str(d["ego_start"]["lane_id"]),
                ego_offset=float(d["ego_start"]["offset"]),
                ego_route=tuple(d["ego_route"]),
                npc_tracks=tuple(
                    tuple(Waypoint(str(w["lane_id"]), float(w["offset"]), float(w["speed"])) for w in track)
                    for track in d.get("npc_tracks", ())
                ),
                npc_types=tuple(d.get("npc_types", ())),
                pedestrian_tracks=tuple(
                    tuple(PedPoint((float(p["position"][0]), float(p["position"][1])), float(p["speed"])) for p in track)
                    for track in d.get("pedestrian_tracks", ())
                ),
                pedestrian_types=tuple(d.get("pedestrian_types", ())),
                obstacles=tuple(
                    ObstacleGene((float(o["position"][0]), float(o["position"][1])), o.get("type", "box"))
                    for o in d.get("obstacles", ())
                ),
                time_of_day=float(d.get("time_of_day", 720.0)),
                weather={k: float(v) for k, v in d.get("weather", {}).items()},
                light_phase_offset=float(d.get("light_phase_offset", 0.0)),
                template=str(d.get("template", "")),
            )
        except (KeyError, TypeError, IndexError) as e:
            raise GenomeError("genome", f"malformed genome JSON ({e!r})") from None

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# -- template ----------------------------------------------------------------


def _rng(v) -> Range:
    lo, hi = float(v[0]), float(v[1])
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    return lo, hi


@dataclass(frozen=True)
class NPCTemplate:
    lanes: tuple[str, ...]
    offsets: tuple[Range, ...]
    speed: Range = (0.0, 60.0)
    types: tuple[str, ...] = NPC_TYPES


@dataclass(frozen=True)
class PedTemplate:
    boxes: tuple[Box, ...]
    speed: Range = PED_SPEED_RANGE
    types: tuple[str, ...] = PED_TYPES


@dataclass(frozen=True)
class ObstacleTemplate:
    box: Box
    types: tuple[str, ...] = OBSTACLE_TYPES


@dataclass(frozen=True)
class ScenarioTemplate:
    """Structure plus per-parameter ranges for one family of scenarios."""

    name: str
    ego_lane: str
    ego_offset: Range
    ego_route: tuple[str, ...]
    npcs: tuple[NPCTemplate, ...] = ()
    pedestrians: tuple[PedTemplate, ...] = ()
    obstacles: tuple[ObstacleTemplate, ...] = ()
    time_of_day: Range = (0.0, 1439.0)
    weather: Mapping[str, Range] = field(default_factory=lambda: {k: (0.0, 1.0) for k in WEATHER_KINDS})
    light_phase_offset: Range = (0.0, 229.0)
    map: str = "t_junction"
    # simulator settings this scenario family needs, e.g. a blinking light cycle
    sim: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, d: Mapping[str, Any]) -> "ScenarioTemplate":
        ego = d["ego"]
        return cls(
            name=d.get("name", "scenario"),
            ego_lane=ego["lane"],
            ego_offset=_rng(ego["offset"]),
            ego_route=tuple(ego["route"]),
            npcs=tuple(
                NPCTemplate(
                    lanes=tuple(n["lanes"]),
                    offsets=tuple(_rng(o) for o in n["offsets"]),
                    speed=_rng(n.get("speed", (0.0, 60.0))),
                    types=tuple(n.get("types", NPC_TYPES)),
                )
                for n in d.get("npcs", ())
            ),
            pedestrians=tuple(
                PedTemplate(
                    boxes=tuple((_rng(b[0]), _rng(b[1])) for b in p["boxes"]),
                    speed=_rng(p.get("speed", PED_SPEED_RANGE)),
                    types=tuple(p.get("types", PED_TYPES)),
                )
                for p in d.get("pedestrians", ())
            ),
            obstacles=tuple(
                ObstacleTemplate((_rng(o["box"][0]), _rng(o["box"][1])), tuple(o.get("types", OBSTACLE_TYPES)))
                for o in d.get("obstacles", ())
            ),
            time_of_day=_rng(d.get("time_of_day", (0.0, 1439.0))),
            weather={k: _rng(v) for k, v in d.get("weather", {k: (0.0, 1.0) for k in WEATHER_KINDS}).items()},
            light_phase_offset=_rng(d.get("light_phase_offset", (0.0, 229.0))),
            map=d.get("map", "t_junction"),
            sim=dict(d.get("sim", {})),
        )

    @classmethod
    def load(cls, path) -> "ScenarioTemplate":
        return cls.from_json(json.loads(Path(path).read_text()))

    def validate(self, m: MapContext) -> None:
        def lane_ok(path, lane_id, rng=None):
            if not m.has_lane(lane_id):
                raise GenomeError(path, f"unknown lane_id {lane_id!r}")
            if rng is not None:
                L = m.lane(lane_id).centerline.length
                if rng[0] < 0 or rng[1] > L:
                    raise GenomeError(path, f"offset range {rng} outside lane {lane_id!r} of length {L:.1f}")

        lane_ok("ego.lane", self.ego_lane, self.ego_offset)
        for i, lid in enumerate(self.ego_route):
            lane_ok(f"ego.route[{i}]", lid)
        m.expand_route(self.ego_route)
        for i, n in enumerate(self.npcs):
            if len(n.lanes) != len(n.offsets) or len(n.lanes) < 2:
                raise GenomeError(f"npcs[{i}]", "need at least two waypoints with one offset range each")
            for j, (lid, rng) in enumerate(zip(n.lanes, n.offsets)):
                lane_ok(f"npcs[{i}].lanes[{j}]", lid, rng)
            m.expand_route(n.lanes)
            if any(t not in NPC_TYPES for t in n.types):
                raise GenomeError(f"npcs[{i}].types", "unknown NPC type")


def check_genome(g: ScenarioGenome, t: ScenarioTemplate, m: MapContext) -> None:
    """Raise :class:`GenomeError` unless ``g`` is a valid point of template ``t`` on map ``m``."""

    def within(path, v, rng):
        if not rng[0] - 1e-9 <= v <= rng[1] + 1e-9:
            raise GenomeError(path, f"value {v} outside [{rng[0]}, {rng[1]}]")

    if g.ego_lane != t.ego_lane or tuple(g.ego_route) != t.ego_route:
        raise GenomeError("ego_start.lane_id", "ego lanes differ from the template")
    if not m.has_lane(g.ego_lane):
        raise GenomeError("ego_start.lane_id", f"unknown lane_id {g.ego_lane!r}")
    within("ego_start.offset", g.ego_offset, t.ego_offset)
    if len(g.npc_tracks) != len(t.npcs) or len(g.npc_types) != len(t.npcs):
        raise GenomeError("npc_tracks", "NPC count differs from the template")
    for i, (track, nt) in enumerate(zip(g.npc_tracks, t.npcs)):
        if tuple(w.lane_id for w in track) != nt.lanes:
            raise GenomeError(f"npc_tracks[{i}]", "waypoint lanes differ from the template")
        for j, (w, rng) in enumerate(zip(track, nt.offsets)):
            if not m.has_lane(w.lane_id):
                raise GenomeError(f"npc_tracks[{i}][{j}].lane_id", f"unknown lane_id {w.lane_id!r}")
            within(f"npc_tracks[{i}][{j}].offset", w.offset, rng)
            within(f"npc_tracks[{i}][{j}].offset", w.offset, (0.0, m.lane(w.lane_id).centerline.length))
            within(f"npc_tracks[{i}][{j}].speed", w.speed, VEHICLE_SPEED_RANGE)
            if j < len(track) - 1:
                within(f"npc_tracks[{i}][{j}].speed", w.speed, nt.speed)
        if track[-1].speed != 0.0:
            raise GenomeError(f"npc_tracks[{i}][{len(track) - 1}].speed", "final waypoint speed must be 0")
        if g.npc_types[i] not in nt.types:
            raise GenomeError(f"npc_types[{i}]", f"type {g.npc_types[i]!r} not allowed")
    if len(g.pedestrian_tracks) != len(t.pedestrians) or len(g.pedestrian_types) != len(t.pedestrians):
        raise GenomeError("pedestrian_tracks", "pedestrian count differs from the template")
    for i, (track, pt) in enumerate(zip(g.pedestrian_tracks, t.pedestrians)):
        if len(track) != len(pt.boxes):
            raise GenomeError(f"pedestrian_tracks[{i}]", "track length differs from the template")
        for j, (p, box) in enumerate(zip(track, pt.boxes)):
            within(f"pedestrian_tracks[{i}][{j}].position[0]", p.position[0], box[0])
            within(f"pedestrian_tracks[{i}][{j}].position[1]", p.position[1], box[1])
            within(f"pedestrian_tracks[{i}][{j}].speed", p.speed, PED_SPEED_RANGE)
        if g.pedestrian_types[i] not in pt.types:
            raise GenomeError(f"pedestrian_types[{i}]", f"type {g.pedestrian_types[i]!r} not allowed")
    if len(g.obstacles) != len(t.obstacles):
        raise GenomeError("obstacles", "obstacle count differs from the template")
    for i, (o, ot) in enumerate(zip(g.obstacles, t.obstacles)):
        within(f"obstacles[{i}].position[0]", o.position[0], ot.box[0])
        within(f"obstacles[{i}].position[1]", o.position[1], ot.box[1])
        if o.type not in ot.types:
            raise GenomeError(f"obstacles[{i}].type", f"type {o.type!r} not allowed")
    within("time_of_day", g.time_of_day, t.time_of_day)
    if set(g.weather) != set(t.weather):
        raise GenomeError("weather", "weather keys differ from the template")
    for k, v in g.weather.items():
        within(f"weather.{k}", v, (0.0, 1.0))
        within(f"weather.{k}", v, t.weather[k])
    within("light_phase_offset", g.light_phase_offset, t.light_phase_offset)
