"""Rule-based driver stubs standing in for the driving stack under test."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

from ..signals import EvalContext
from ..world import WorldState
from .engine import Control

MS = 1 / 3.6  # km/h -> m/s


@dataclass
class Blocker:
    gap: float  # free distance from our front bumper, metres
    speed: float  # along our route, m/s
    kind: str


class View:
    """What a driver needs to know about one world state, computed once."""

    def __init__(self, w: WorldState):
        self.w = w
        self.ctx = ctx = EvalContext(w)
        self.route = ctx.route
        self.front = ctx.front
        self.rear = ctx.rear
        self.v = w.ego.speed * MS
        lines = [a for a in self.route.stoplines if a >= self.rear]
        self.line = lines[0] if lines else None
        self.d = None if self.line is None else self.line - self.front
        juncs = [(a, b) for a, b in self.route.junctions if b > self.rear]
        self.junction = juncs[0] if juncs else None
        self.color = ctx.light.color
        self.turn = w.ego.signals.direction

    @property
    def in_windows(self) -> bool:
        """Stopline or junction entry within 2 m ahead (or under the car)."""
        arcs = ([self.line] if self.line is not None else []) + ([self.junction[0]] if self.junction else [])
        return self.ctx.feature_ahead(arcs, 2.0)

    def blockers(self, peds: bool = True, lookahead: float = 60.0) -> list[Blocker]:
        out = []
        line = self.route.line
        h = self.w.ego.heading
        arc0 = self.ctx.arc

        def add(pos, half_len, half_wid, speed, heading, kind):
            a, lat = line.project(pos)
            if a <= arc0 or a - self.front > lookahead + half_len:
                return
            _, rh = line.point_at(a)
            phi = heading - rh
            ext_long = abs(math.cos(phi)) * half_len + abs(math.sin(phi)) * half_wid
            ext_lat = abs(math.sin(phi)) * half_len + abs(math.cos(phi)) * half_wid
            if abs(lat) >= 0.9 + ext_lat + 0.4:
                return
            gap = a - ext_long - self.front
            if gap < -1.0:
                return  # beside or behind our front bumper
            out.append(Blocker(gap, max(0.0, speed * math.cos(phi)), kind))

        for n in self.w.npcs:
            add(n.position, 2.25, 1.0, n.speed * MS, n.heading, "npc")
        for o in self.w.obstacles:
            add(o.position, o.radius, o.radius, 0.0, h, "obstacle")
        if peds:
            for p in self.w.pedestrians:
                add(p.position, p.radius, p.radius, 0.0, h, "pedestrian")
        return out


def follow_cap(blockers, decel: float, margin: float) -> float:
    """Highest speed (m/s) that still lets us stop ``margin`` metres behind every blocker."""
    cap = math.inf
    for b in blockers:
        if b.gap >= margin:
            c = b.speed + math.sqrt(2 * decel * (b.gap - margin))
        else:
            c = b.speed * max(0.0, (b.gap - 0.3) / (margin - 0.3))
        cap = min(cap, c)
    return cap


def stop_cap(dist: float, decel: float) -> float:
    return math.sqrt(2 * decel * max(0.0, dist))


def visibility_scale(v: View, floor: float) -> float:
    return min(1.0, max(floor, v.w.environment.visibility / 300.0))


class DriverStub:
    name = "driver"

    def policy(self, seed: int) -> Callable[[WorldState], Control]:
        raise NotImplementedError


class LawfulDriver(DriverStub):
    """Cautious driver that plans around the junction rules.

    It waits at a hold point a few metres before the stopline until the light
    is green and the crossing is clear, creeps across the line slowly enough to
    stop within a fraction of a second, stops on yellow unless already over the
    line, and yields to pedestrians and priority vehicles.
    """

    name = "lawful"
    cruise = 40.0  # km/h
    hold = 3.8  # metres between front bumper and stopline while waiting
    creep = 4.0  # km/h inside the last metres before the line
    creep_zone = 3.5
    approach_decel = 2.5
    clear_horizon = 4.0  # seconds of pedestrian look-ahead
    yellow_window = 3.5  # a yellow onset this close to the line obliges a stop
    stopped = 0.5  # km/h

    def policy(self, seed: int):
        # set when yellow catches us moving inside the window, cleared once stopped;
        # a stop just past the line is fine, the car then moves off again
        owes_stop = False

        def act(w: WorldState) -> Control:
            nonlocal owes_stop
            v = View(w)
            limit = v.ctx.lane.speed_limit[1]
            committed = v.color == "yellow" and (v.d is None or v.d <= 0) and v.in_windows
            # once over the line on yellow, clear the junction without the bad-weather slowdown
            scale = 1.0 if committed else visibility_scale(v, 0.4)
            target = min(self.cruise, limit) * scale * MS
            target = min(target, follow_cap(v.blockers(), 3.5, 1.5))
            signal = v.turn if v.turn in ("left", "right") and v.junction and v.junction[0] - v.front < 50 else "off"
            if w.ego.speed < self.stopped:
                owes_stop = False
            elif v.color == "yellow" and v.d is not None and 0 < v.d <= self.yellow_window:
                owes_stop = True
            if owes_stop:
                target = 0.0
            elif v.d is not None:
                target = min(target, self._junction_cap(v))
            elif v.color == "red" and v.turn != "right" and v.in_windows:
                # stopline already behind us but the junction entry is still under the car
                target = 0.0
            return Control(target / MS, turn_signal=signal)

        return act

    def _junction_cap(self, v: View) -> float:
        d, color = v.d, v.color
        ahead = d - v.v * 0.1  # where we will be next step
        creep = self.creep * MS
        approach = math.sqrt(creep**2 + 2 * self.approach_decel * max(0.0, ahead - self.creep_zone))
        may_turn_on_red = color == "red" and v.turn == "right"
        if d > 0:
            # anywhere outside the creep zone counts as waiting at the hold point
            if d > self.creep_zone:
                if (color == "green" or may_turn_on_red) and self._clear(v):
                    return approach
                return min(approach, stop_cap(ahead - self.hold, self.approach_decel))
            if color == "green" or may_turn_on_red:
                return approach
            return 0.0
        # over the line
        if color == "red" and not may_turn_on_red and v.in_windows:
            return 0.0
        return math.inf

    def _clear(self, v: View) -> bool:
        w, route = v.w, v.route
        if v.junction is None:
            return True
        j_in, j_out = v.junction
        for b in v.blockers(lookahead=j_out - v.front + 15.0):
            if b.kind == "obstacle" or b.speed < 1.0:
                return False
        for n in w.npcs:
            if any(j.distance(n.position) <= 2.5 for j in w.map_ctx.junctions):
                return False
        lo, hi = v.line if v.line is not None else j_in, j_out + 2.0
        for p in w.pedestrians:
            for k in range(0, int(self.clear_horizon / 0.25) + 1):
                dt = k * 0.25
                q = (p.position[0] + math.cos(p.heading) * p.speed * dt, p.position[1] + math.sin(p.heading) * p.speed * dt)
                a, lat = route.line.project(q)
                if lo - 1.0 <= a <= hi and abs(lat) < 2.5:
                    return False
        return True


class AggressiveDriver(DriverStub):
    """Fast driver that rushes yellow lights, never signals, and sometimes ignores pedestrians.

    Near the line on yellow at low speed it hesitates and stops; once stopped
    there it treats the following red as a chance to go.
    """

    name = "aggressive"
    cruise = 55.0
    red_decel = 3.0
    ignore_peds_prob = 0.5

    def policy(self, seed: int):
        ignore_peds = random.Random(f"aggressive-{seed}").random() < self.ignore_peds_prob
        state = {"hesitated": False, "stopping": False}

        def act(w: WorldState) -> Control:
            v = View(w)
            target = self.cruise * visibility_scale(v, 0.5) * MS
            target = min(target, follow_cap(v.blockers(peds=not ignore_peds), 4.0, 1.0))
            if v.d is not None and v.d > 0:
                target = min(target, self._light_cap(v, state))
            if v.color == "green":
                state["hesitated"] = state["stopping"] = False
            return Control(target / MS)

        return act

    def _light_cap(self, v: View, state) -> float:
        d = v.d
        if v.color == "yellow":
            if d <= 2.0 and v.v < 12.0 * MS:
                state["hesitated"] = True
                return 0.0
            return math.inf
        if v.color == "red":
            if state["hesitated"]:
                return math.inf
            if state["stopping"] or v.v**2 / (2 * self.red_decel) + 1.0 <= d:
                state["stopping"] = True
                return stop_cap(d - 0.3 - v.v * 0.1, self.red_decel)
            return math.inf
        return math.inf


DRIVERS: dict[str, type[DriverStub]] = {"lawful": LawfulDriver, "aggressive": AggressiveDriver}


def builtin_drivers() -> list[tuple[str, DriverStub]]:
    return [(name, cls()) for name, cls in DRIVERS.items()]


def get_driver(name: str) -> DriverStub:
    try:
        return DRIVERS[name]()
    except KeyError:
        raise ValueError(f"unknown driver {name!r}; choose from {sorted(DRIVERS)}") from None
