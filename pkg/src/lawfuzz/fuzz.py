"""Coverage-guided genetic search for traffic-law violations.

Every uncovered violation-set element keeps the genome that came closest to
satisfying it (highest robustness). Parents are drawn from those seeds,
recombined per gene category, and perturbed; any trace that satisfies an
element covers it for good.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .formula import Formula, Not, normalize, signal_keys
from .robustness import rho
from .sim.drivers import DriverStub
from .sim.engine import SimConfig, find_accidents, red_light_crossings, simulate
from .sim.genome import (
    PED_SPEED_RANGE,
    ObstacleGene,
    PedPoint,
    ScenarioGenome,
    ScenarioTemplate,
    TemplateMismatchError,
    Waypoint,
)
from .trace import Trace, trace_from_states
from .violation import theta

log = logging.getLogger(__name__)

CATEGORIES = ("speed", "type", "time", "weather", "light_phase_offset")


@dataclass(frozen=True)
class FuzzConfig:
    population_size: int = 20
    max_generations: int = 20
    crossover_prob: float = 0.6
    mutation_prob: float = 0.2
    gaussian_sigma_frac: float = 0.1
    rng_seed: int = 0
    time_budget: float | None = None  # seconds
    # Boolean atoms score +/- this value during search; it must dwarf the
    # numeric signal scale or the Boolean context of an element gives no gradient
    saturation: float = 1000.0
    engine: str = "ga"  # "ga" or "random"

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be an even number >= 2")
        if self.max_generations < 1:
            raise ValueError("max_generations must be >= 1")
        for p in (self.crossover_prob, self.mutation_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.engine not in ("ga", "random"):
            raise ValueError(f"unknown engine {self.engine!r}")

    def to_json(self) -> dict:
        return {
            "population_size": self.population_size,
            "max_generations": self.max_generations,
            "crossover_prob": self.crossover_prob,
            "mutation_prob": self.mutation_prob,
            "gaussian_sigma_frac": self.gaussian_sigma_frac,
            "rng_seed": self.rng_seed,
            "time_budget": self.time_budget,
            "saturation": self.saturation,
            "engine": self.engine,
        }


@dataclass
class SuiteEntry:
    genome: ScenarioGenome
    trace: Trace
    covered: list[int]
    robustness: dict[int, float]
    sim_seed: int
    generation: int
    member: int
    accidents: list[dict]
    red_crossings: list[dict] = field(default_factory=list)


@dataclass
class FuzzState:
    elements: tuple[Formula, ...]
    theta_remaining: list[int]
    seeds: dict[int, ScenarioGenome] = field(default_factory=dict)
    robust: dict[int, float] = field(default_factory=dict)
    gamma: list[SuiteEntry] = field(default_factory=list)
    curve: list[dict] = field(default_factory=list)
    simulated: int = 0
    timed_out: bool = False

    @property
    def covered(self) -> list[int]:
        return sorted(set(range(len(self.elements))) - set(self.theta_remaining))

    @property
    def coverage(self) -> float:
        return 1.0 if not self.elements else len(self.covered) / len(self.elements)


# -- RNG plumbing ------------------------------------------------------------


def member_rng(seed: int, generation: int, member: int, purpose: int = 0) -> np.random.Generator:
    """Independent stream per population member, so evaluation order never matters."""
    return np.random.default_rng(np.random.SeedSequence([seed, generation, member, purpose]))


def member_seed(seed: int, generation: int, member: int) -> int:
    return int(np.random.SeedSequence([seed, generation, member, 7]).generate_state(1)[0])


# -- genome operators --------------------------------------------------------


def _uniform(rng, r) -> float:
    return float(rng.uniform(r[0], r[1])) if r[1] > r[0] else float(r[0])


def random_genome(t: ScenarioTemplate, rng: np.random.Generator) -> ScenarioGenome:
    tracks, npc_types = [], []
    for nt in t.npcs:
        track = []
        for j, (lid, rg) in enumerate(zip(nt.lanes, nt.offsets)):
            speed = 0.0 if j == len(nt.lanes) - 1 else _uniform(rng, nt.speed)
            track.append(Waypoint(lid, _uniform(rng, rg), speed))
        tracks.append(tuple(track))
        npc_types.append(nt.types[int(rng.integers(len(nt.types)))])
    peds, ped_types = [], []
    for pt in t.pedestrians:
        peds.append(tuple(PedPoint((_uniform(rng, b[0]), _uniform(rng, b[1])), _uniform(rng, pt.speed)) for b in pt.boxes))
        ped_types.append(pt.types[int(rng.integers(len(pt.types)))])
    obstacles = tuple(
        ObstacleGene((_uniform(rng, o.box[0]), _uniform(rng, o.box[1])), o.types[int(rng.integers(len(o.types)))])
        for o in t.obstacles
    )
    return ScenarioGenome(
        ego_lane=t.ego_lane,
        ego_offset=_uniform(rng, t.ego_offset),
        ego_route=t.ego_route,
        npc_tracks=tuple(tracks),
        npc_types=tuple(npc_types),
        pedestrian_tracks=tuple(peds),
        pedestrian_types=tuple(ped_types),
        obstacles=obstacles,
        time_of_day=_uniform(rng, t.time_of_day),
        weather={k: _uniform(rng, r) for k, r in sorted(t.weather.items())},
        light_phase_offset=_uniform(rng, t.light_phase_offset),
        template=t.name,
    )


def _same_template(a: ScenarioGenome, b: ScenarioGenome) -> bool:
    return (
        a.template == b.template
        and a.ego_lane == b.ego_lane
        and a.ego_route == b.ego_route
        and [tuple(w.lane_id for w in tr) for tr in a.npc_tracks] == [tuple(w.lane_id for w in tr) for tr in b.npc_tracks]
        and [len(tr) for tr in a.pedestrian_tracks] == [len(tr) for tr in b.pedestrian_tracks]
        and len(a.obstacles) == len(b.obstacles)
        and set(a.weather) == set(b.weather)
    )


def _with_speeds(g: ScenarioGenome, src: ScenarioGenome) -> ScenarioGenome:
    tracks = tuple(
        tuple(replace(w, speed=ws.speed) for w, ws in zip(tr, trs)) for tr, trs in zip(g.npc_tracks, src.npc_tracks)
    )
    peds = tuple(
        tuple(replace(p, speed=ps.speed) for p, ps in zip(tr, trs)) for tr, trs in zip(g.pedestrian_tracks, src.pedestrian_tracks)
    )
    return replace(g, npc_tracks=tracks, pedestrian_tracks=peds)


def _with_types(g: ScenarioGenome, src: ScenarioGenome) -> ScenarioGenome:
    obstacles = tuple(replace(o, type=os_.type) for o, os_ in zip(g.obstacles, src.obstacles))
    return replace(g, npc_types=src.npc_types, pedestrian_types=src.pedestrian_types, obstacles=obstacles)


def crossover(a: ScenarioGenome, b: ScenarioGenome, rng: np.random.Generator) -> tuple[ScenarioGenome, ScenarioGenome]:
    """Swap whole gene categories between two parents; positions never move between them."""
    if not _same_template(a, b):
        raise TemplateMismatchError("crossover needs two genomes of the same template")
    swap = rng.random(len(CATEGORIES)) < 0.5
    x, y = a, b
    for cat, do in zip(CATEGORIES, swap):
        if not do:
            continue
        if cat == "speed":
            x, y = _with_speeds(x, b), _with_speeds(y, a)
        elif cat == "type":
            x, y = _with_types(x, b), _with_types(y, a)
        elif cat == "time":
            x, y = replace(x, time_of_day=b.time_of_day), replace(y, time_of_day=a.time_of_day)
        elif cat == "weather":
            x, y = replace(x, weather=dict(b.weather)), replace(y, weather=dict(a.weather))
        else:
            x, y = replace(x, light_phase_offset=b.light_phase_offset), replace(y, light_phase_offset=a.light_phase_offset)
    return x, y


class _Mutator:
    def __init__(self, cfg: FuzzConfig, rng: np.random.Generator):
        self.p = cfg.mutation_prob
        self.frac = cfg.gaussian_sigma_frac
        self.rng = rng

    def real(self, v: float, r) -> float:
        if self.rng.random() >= self.p:
            return v
        lo, hi = r
        return float(min(max(v + self.rng.normal(0.0, self.frac * (hi - lo)), lo), hi))

    def pick(self, v: str, choices: Sequence[str]) -> str:
        if self.rng.random() >= self.p:
            return v
        return choices[int(self.rng.integers(len(choices)))]


def mutate(g: ScenarioGenome, t: ScenarioTemplate, cfg: FuzzConfig, rng: np.random.Generator) -> ScenarioGenome:
    """Gaussian noise on continuous genes, uniform resampling of discrete ones, then clipping."""
    m = _Mutator(cfg, rng)
    tracks = []
    for tr, nt in zip(g.npc_tracks, t.npcs):
        last = len(tr) - 1
        tracks.append(
            tuple(
                Waypoint(w.lane_id, m.real(w.offset, rg), 0.0 if j == last else m.real(w.speed, nt.speed))
                for j, (w, rg) in enumerate(zip(tr, nt.offsets))
            )
        )
    npc_types = tuple(m.pick(v, nt.types) for v, nt in zip(g.npc_types, t.npcs))
    peds = tuple(
        tuple(
            PedPoint((m.real(p.position[0], b[0]), m.real(p.position[1], b[1])), m.real(p.speed, pt.speed))
            for p, b in zip(tr, pt.boxes)
        )
        for tr, pt in zip(g.pedestrian_tracks, t.pedestrians)
    )
    ped_types = tuple(m.pick(v, pt.types) for v, pt in zip(g.pedestrian_types, t.pedestrians))
    obstacles = tuple(
        ObstacleGene((m.real(o.position[0], ot.box[0]), m.real(o.position[1], ot.box[1])), m.pick(o.type, ot.types))
        for o, ot in zip(g.obstacles, t.obstacles)
    )
    return replace(
        g,
        ego_offset=m.real(g.ego_offset, t.ego_offset),
        npc_tracks=tuple(tracks),
        npc_types=npc_types,
        pedestrian_tracks=peds,
        pedestrian_types=ped_types,
        obstacles=obstacles,
        time_of_day=m.real(g.time_of_day, t.time_of_day),
        weather={k: m.real(v, t.weather[k]) for k, v in sorted(g.weather.items())},
        light_phase_offset=m.real(g.light_phase_offset, t.light_phase_offset),
    )


def select_parents(state: FuzzState, n: int, rng: np.random.Generator) -> list[ScenarioGenome]:
    """Pairwise tournament: one entrant from the top half, one from everyone; the more robust wins."""
    entries = sorted(((state.robust[i], i) for i in state.seeds), key=lambda e: (-e[0], e[1]))
    if not entries:
        return []
    top = entries[: max(1, len(entries) // 2)]
    out = []
    for _ in range(n):
        a = top[int(rng.integers(len(top)))]
        b = entries[int(rng.integers(len(entries)))]
        out.append(state.seeds[(a if a[0] >= b[0] else b)[1]])
    return out


# -- the campaign loop -------------------------------------------------------


def _score(state: FuzzState, g: ScenarioGenome, trace: Trace, saturation: float) -> tuple[list[int], dict[int, float]]:
    newly, values = [], {}
    for i in list(state.theta_remaining):
        r = rho(state.elements[i], trace, 0, saturation)
        values[i] = r
        if r >= 0:
            state.theta_remaining.remove(i)
            state.seeds.pop(i, None)
            state.robust.pop(i, None)
            newly.append(i)
        elif r > state.robust.get(i, -math.inf):
            state.robust[i] = r
            state.seeds[i] = g
    return newly, values


def run_campaign(
    elements: Sequence[Formula],
    template: ScenarioTemplate,
    driver: DriverStub,
    cfg: FuzzConfig = FuzzConfig(),
    sim: SimConfig = SimConfig(),
) -> FuzzState:
    """Search for traces satisfying each of ``elements`` (already in core form)."""
    keys = sorted(set().union(*(signal_keys(e) for e in elements))) if elements else []
    state = FuzzState(tuple(elements), list(range(len(elements))))
    n = cfg.population_size
    start = time.monotonic()
    population = [random_genome(template, member_rng(cfg.rng_seed, 0, i)) for i in range(n)]
    for gen in range(cfg.max_generations):
        for i, g in enumerate(population):
            if cfg.time_budget is not None and time.monotonic() - start > cfg.time_budget:
                state.timed_out = True
                break
            seed = member_seed(cfg.rng_seed, gen, i)
            try:
                states = simulate(g, driver, sim, seed)
            except Exception:
                log.exception("simulation failed for generation %d member %d; replacing it", gen, i)
                g = random_genome(template, member_rng(cfg.rng_seed, gen, i, 99))
                states = simulate(g, driver, sim, seed)
            trace = trace_from_states(states, keys)
            state.simulated += 1
            newly, values = _score(state, g, trace, cfg.saturation)
            if newly:
                state.gamma.append(
                    SuiteEntry(
                        g,
                        trace,
                        newly,
                        {k: values[k] for k in newly},
                        seed,
                        gen,
                        i,
                        find_accidents(states),
                        red_light_crossings(states),
                    )
                )
                log.info("gen %d member %d covered %s", gen, i, newly)
            if not state.theta_remaining:
                break
        state.curve.append({"generation": gen, "simulated": state.simulated, "covered": len(state.covered)})
        if not state.theta_remaining or state.timed_out:
            break
        population = _next_generation(state, template, cfg, gen + 1)
    return state


def _next_generation(state: FuzzState, t: ScenarioTemplate, cfg: FuzzConfig, gen: int) -> list[ScenarioGenome]:
    n = cfg.population_size
    if cfg.engine == "random":
        return [random_genome(t, member_rng(cfg.rng_seed, gen, i)) for i in range(n)]
    rng = member_rng(cfg.rng_seed, gen, 2**32 - 1)
    # elements stuck at -inf never get a seed; random draws stand in for them
    parents = select_parents(state, n, rng)
    parents += [random_genome(t, member_rng(cfg.rng_seed, gen, i, 1)) for i in range(len(parents), n)]
    out = []
    for i in range(0, n, 2):
        a, b = parents[i], parents[i + 1]
        mr = member_rng(cfg.rng_seed, gen, i, 2)
        if mr.random() < cfg.crossover_prob:
            a, b = crossover(a, b, mr)
        out.append(mutate(a, t, cfg, member_rng(cfg.rng_seed, gen, i, 3)))
        out.append(mutate(b, t, cfg, member_rng(cfg.rng_seed, gen, i + 1, 3)))
    return out


def fuzz(law: Formula, driver: DriverStub, cfg: FuzzConfig, sim: SimConfig, template: ScenarioTemplate) -> FuzzState:
    """Cover as much of the law's violation set as the budget allows."""
    vs = theta(normalize(law))
    if not len(vs):
        raise ValueError("law has an empty violation set; nothing to search for")
    return run_campaign(vs.elements, template, driver, cfg, sim)


def falsify(law: Formula, driver: DriverStub, cfg: FuzzConfig, sim: SimConfig, template: ScenarioTemplate) -> FuzzState:
    """Minimize the law's robustness directly; one pseudo-element, the negated law."""
    return run_campaign([normalize(Not(law))], template, driver, cfg, sim)
