"""Fixed-step kinematic simulation of one scenario genome."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..world import (
    NPC,
    Ego,
    EgoSignals,
    Environment,
    LightState,
    MapContext,
    Obstacle,
    Pedestrian,
    RouteGeometry,
    WorldState,
)
from .genome import GenomeError, ScenarioGenome
from .maps import load_map

MAX_ACCEL = 4.0  # m/s^2, both directions
NPC_CREEP = 6.0  # km/h; NPCs never stall before their final waypoint
CLAIM_DISTANCE = 9.5  # ego front this close to a junction entry claims it


@dataclass(frozen=True)
class LightCycle:
    green: int = 100
    yellow: int = 30
    red: int = 100
    blink_yellow: bool = False

    def __post_init__(self):
        if min(self.green, self.yellow, self.red) < 1:
            raise ValueError("every light phase needs at least one step")
        if self.red <= self.yellow:
            raise ValueError("red must outlast yellow so the cross street gets a green phase")

    @property
    def period(self) -> int:
        return self.green + self.yellow + self.red

    def state(self, group: str, t: int) -> LightState:
        p = t % self.period
        g, y = self.green, self.yellow
        if group == "main":
            color = "green" if p < g else "yellow" if p < g + y else "red"
        else:
            # cross street: red while the main road has green or yellow
            q = p - g - y
            color = "red" if q < 0 else "green" if q < self.red - y else "yellow"
        return LightState(color, self.blink_yellow and color == "yellow")


@dataclass(frozen=True)
class SimConfig:
    steps: int = 300
    dt: float = 0.1
    map: str = "t_junction"
    light_cycle: LightCycle = field(default_factory=LightCycle)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def to_json(self) -> dict:
        lc = self.light_cycle
        return {
            "steps": self.steps,
            "dt": self.dt,
            "map": self.map,
            "light_cycle": {"green": lc.green, "yellow": lc.yellow, "red": lc.red, "blink_yellow": lc.blink_yellow},
        }

    @classmethod
    def from_json(cls, d) -> "SimConfig":
        lc = d.get("light_cycle", {})
        return cls(
            steps=int(d.get("steps", 300)),
            dt=float(d.get("dt", 0.1)),
            map=str(d.get("map", "t_junction")),
            light_cycle=LightCycle(
                int(lc.get("green", 100)), int(lc.get("yellow", 30)), int(lc.get("red", 100)), bool(lc.get("blink_yellow", False))
            ),
        )


def sim_config_for(template, base: SimConfig | None = None) -> SimConfig:
    """Merge a template's map and simulator overrides over ``base``."""
    d = (base or SimConfig()).to_json()
    d["map"] = template.map
    over = dict(template.sim)
    if "light_cycle" in over:
        d["light_cycle"] = {**d["light_cycle"], **over.pop("light_cycle")}
    d.update(over)
    return SimConfig.from_json(d)


@dataclass(frozen=True)
class Control:
    target_speed: float  # km/h
    lane_change_request: str | None = None
    turn_signal: str = "off"
    horn: bool = False


Policy = Callable[[WorldState], Control]


def visibility(weather) -> float:
    """Metres of visibility left by fog, rain and snow."""
    fog, rain, snow = (weather.get(k, 0.0) for k in ("fog", "rain", "snow"))
    return 1000.0 * (1 - 0.9 * fog) * (1 - 0.5 * rain) * (1 - 0.5 * snow)


def environment_of(g: ScenarioGenome) -> Environment:
    tod = g.time_of_day
    return Environment(
        weather=dict(g.weather),
        visibility=visibility(g.weather),
        time_of_day=tod,
        streetLightOn=tod < 360 or tod > 1140,
    )


def _route_turn(m: MapContext, lanes: Sequence[str]) -> str:
    for lid in lanes:
        lane = m.lane(lid)
        if lane.number == 0:
            return lane.turn
    return "forward"


class _NPCRun:
    def __init__(self, i: int, track, npc_type: str, m: MapContext):
        self.id = f"npc{i}"
        self.type = npc_type
        lanes = m.expand_route([w.lane_id for w in track])
        self.route: RouteGeometry = m.route(lanes)
        self.turn = _route_turn(m, lanes)
        arcs = []
        for j, w in enumerate(track):
            a = self.route.lane_start(w.lane_id) + w.offset
            arcs.append(max(a, arcs[-1]) if arcs else a)
        self.arcs = arcs
        self.speeds = [w.speed for w in track]
        self.s = arcs[0]
        self.v = track[0].speed
        self.done = False
        self.junction_entries = [a for a, _ in self.route.junctions]

    def planned_speed(self) -> float:
        s, arcs, sp = self.s, self.arcs, self.speeds
        if self.done or s >= arcs[-1]:
            return 0.0
        for j in range(len(arcs) - 1):
            if arcs[j] <= s < arcs[j + 1] or j == len(arcs) - 2:
                span = arcs[j + 1] - arcs[j]
                u = 0.0 if span <= 0 else min(max((s - arcs[j]) / span, 0.0), 1.0)
                return max(NPC_CREEP, sp[j] + u * (sp[j + 1] - sp[j]))
        return NPC_CREEP

    def snapshot(self) -> NPC:
        (x, y), h = self.route.line.point_at(self.s)
        return NPC(self.id, (x, y), h, self.v, self.route.lane_at(self.s), self.type, self.turn)


class _PedRun:
    def __init__(self, i: int, track, ped_type: str):
        self.id = f"ped{i}"
        self.type = ped_type
        self.points = [p.position for p in track]
        self.speeds = [p.speed for p in track]
        self.pos = self.points[0]
        self.seg = 0
        self.heading = 0.0
        self.v = 0.0

    def step(self, dt: float) -> None:
        budget = None
        while self.seg < len(self.points) - 1:
            target = self.points[self.seg + 1]
            speed = self.speeds[self.seg]
            if budget is None:
                budget = speed * dt
            dx, dy = target[0] - self.pos[0], target[1] - self.pos[1]
            dist = math.hypot(dx, dy)
            if dist > 0:
                self.heading = math.atan2(dy, dx)
            self.v = speed
            if speed <= 0:
                return
            if dist > budget:
                self.pos = (self.pos[0] + dx / dist * budget, self.pos[1] + dy / dist * budget)
                return
            self.pos = target
            budget -= dist
            self.seg += 1
        self.v = 0.0

    def snapshot(self) -> Pedestrian:
        return Pedestrian(self.id, self.pos, self.v if self.seg < len(self.points) - 1 else 0.0, self.heading, self.type)


def _claims(route: RouteGeometry, front: float, rear: float) -> bool:
    return any(a - CLAIM_DISTANCE <= front and rear <= b for a, b in route.junctions)


def simulate(genome: ScenarioGenome, driver, cfg: SimConfig = SimConfig(), seed: int = 0) -> list[WorldState]:
    """Run ``genome`` for ``cfg.steps`` steps with ``driver`` at the wheel.

    ``driver`` is a :class:`~lawfuzz.sim.drivers.DriverStub` (anything with a
    ``policy(seed)`` method returning a state -> Control callable).
    """
    m = load_map(cfg.map)
    for path, lid in [("ego_start.lane_id", genome.ego_lane)] + [
        (f"ego_route[{i}]", l) for i, l in enumerate(genome.ego_route)
    ]:
        if not m.has_lane(lid):
            raise GenomeError(path, f"unknown lane_id {lid!r}")
    for i, track in enumerate(genome.npc_tracks):
        for j, w in enumerate(track):
            if not m.has_lane(w.lane_id):
                raise GenomeError(f"npc_tracks[{i}][{j}].lane_id", f"unknown lane_id {w.lane_id!r}")
    ego_lanes = m.expand_route(genome.ego_route)
    if genome.ego_lane not in ego_lanes:
        raise GenomeError("ego_start.lane_id", "ego start lane is not on the ego route")
    ego_route = m.route(ego_lanes)
    policy: Policy = driver.policy(seed)
    dt = cfg.dt
    env = environment_of(genome)
    offset = int(round(genome.light_phase_offset))
    heads = m.signal_heads
    npcs = [_NPCRun(i, tr, genome.npc_types[i], m) for i, tr in enumerate(genome.npc_tracks)]
    peds = [_PedRun(i, tr, genome.pedestrian_types[i]) for i, tr in enumerate(genome.pedestrian_tracks)]
    obstacles = tuple(Obstacle(o.position, o.type) for o in genome.obstacles)
    turn = _route_turn(m, ego_lanes)
    end_arc = ego_route.line.length

    s = ego_route.lane_start(genome.ego_lane) + genome.ego_offset
    v = 0.0  # m/s
    acc = 0.0
    control = Control(0.0)
    length = 4.5
    states: list[WorldState] = []
    for t in range(cfg.steps):
        (x, y), h = ego_route.line.point_at(s)
        lane_id = ego_route.lane_at(s)
        past_junction = all(s - length / 2 > b for _, b in ego_route.junctions)
        ego = Ego(
            position=(x, y),
            heading=h,
            speed=v * 3.6,
            lane_id=lane_id,
            acc=acc,
            signals=EgoSignals(
                turnSignal=control.turn_signal,
                hornOn=control.horn,
                lowBeamOn=env.streetLightOn,
                direction="forward" if past_junction else turn,
                brake=min(100.0, max(0.0, -acc / MAX_ACCEL * 100.0)),
            ),
            route=ego_lanes,
            length=length,
        )
        lights = {hd.id: cfg.light_cycle.state(hd.group, t + offset) for hd in heads}
        w = WorldState(
            time_step=t,
            ego=ego,
            map_ctx=m,
            npcs=tuple(n.snapshot() for n in npcs),
            pedestrians=tuple(p.snapshot() for p in peds),
            obstacles=obstacles,
            lights=lights,
            environment=env,
        )
        states.append(w)
        if t == cfg.steps - 1:
            break

        control = policy(w)
        target = max(0.0, control.target_speed) / 3.6
        if s >= end_arc - length / 2:
            target = 0.0
        a = min(max((target - v) / dt, -MAX_ACCEL), MAX_ACCEL)
        v_new = max(0.0, v + a * dt)
        acc = (v_new - v) / dt
        v = v_new
        s = min(s + v * dt, end_arc)

        # NPCs yield to an ego inside, or about to enter, the junction
        claim = _claims(ego_route, s + length / 2, s - length / 2)
        for n in npcs:
            want = n.planned_speed() / 3.6
            front = n.s + 2.25
            if claim and any(front <= a_in and front + want * dt >= a_in - 1.0 for a_in in n.junction_entries):
                want = 0.0
            if want > 0:
                ahead, lat = n.route.line.project((x, y))
                gap = ahead - n.s
                if 0 < gap <= 7.0 + want * 1.2 and abs(lat) < 2.2:
                    want = 0.0
            n.v = want * 3.6
            n.s = min(n.s + want * dt, n.arcs[-1])
            if n.s >= n.arcs[-1]:
                n.done = True
                n.v = 0.0
        for p in peds:
            p.step(dt)
    return states


# -- accidents ---------------------------------------------------------------

VEHICLE_DISCS = (-1.5, 0.0, 1.5)
VEHICLE_DISC_RADIUS = 1.0


def _discs(pos, heading):
    c, s_ = math.cos(heading), math.sin(heading)
    return [(pos[0] + c * k, pos[1] + s_ * k) for k in VEHICLE_DISCS]


def _overlap(discs_a, ra, discs_b, rb) -> bool:
    lim = (ra + rb) ** 2
    return any((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 < lim for a in discs_a for b in discs_b)


def find_accidents(states: Sequence[WorldState]) -> list[dict]:
    """First step of every ego contact with another agent, by agent."""
    seen: dict[str, dict] = {}
    for w in states:
        e = _discs(w.ego.position, w.ego.heading)
        for n in w.npcs:
            if n.id not in seen and _overlap(e, VEHICLE_DISC_RADIUS, _discs(n.position, n.heading), VEHICLE_DISC_RADIUS):
                seen[n.id] = {"t": w.time_step, "agent": n.id, "kind": "npc"}
        for p in w.pedestrians:
            if p.id not in seen and _overlap(e, VEHICLE_DISC_RADIUS, [p.position], p.radius):
                seen[p.id] = {"t": w.time_step, "agent": p.id, "kind": "pedestrian"}
        for i, o in enumerate(w.obstacles):
            key = f"obstacle{i}"
            if key not in seen and _overlap(e, VEHICLE_DISC_RADIUS, [o.position], o.radius):
                seen[key] = {"t": w.time_step, "agent": key, "kind": "obstacle"}
    return sorted(seen.values(), key=lambda r: (r["t"], r["agent"]))


def red_light_crossings(states: Sequence[WorldState]) -> list[dict]:
    """Steps at which the ego's front bumper passes a stopline whose light is red."""
    out: list[dict] = []
    prev = None
    for w in states:
        m = w.map_ctx
        route = m.route(w.ego_route)
        front = route.line.project(w.ego.position)[0] + w.ego.length / 2
        if prev is not None:
            for sl in m.stoplines:
                head = m.head_for_lane(sl.lane)
                if head is None or sl.lane not in route.lanes:
                    continue
                (x0, y0), (x1, y1) = sl.segment
                at = route.line.project(((x0 + x1) / 2, (y0 + y1) / 2))[0]
                light = w.lights.get(head.id)
                if prev < at <= front and light is not None and light.color == "red":
                    out.append({"t": w.time_step, "stopline": sl.id})
        prev = front
    return out
