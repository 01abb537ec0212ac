import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from lawfuzz.corpus import load_entry
from lawfuzz.formula import normalize, signal_keys
from lawfuzz.fuzz import random_genome
from lawfuzz.robustness import rho
from lawfuzz.sim.drivers import builtin_drivers, get_driver
from lawfuzz.sim.engine import (
    MAX_ACCEL,
    LightCycle,
    SimConfig,
    find_accidents,
    red_light_crossings,
    sim_config_for,
    simulate,
)
from lawfuzz.sim.genome import GenomeError, ScenarioGenome, ScenarioTemplate, Waypoint, check_genome
from lawfuzz.sim.maps import BUNDLED_DIR, load_map, t_junction
from lawfuzz.trace import trace_from_states
from lawfuzz.world import Pedestrian

LAW38 = load_entry("law38")
SIM38 = sim_config_for(LAW38.template)
KEYS38 = signal_keys(LAW38.law)
DATA = Path(__file__).parent / "data"


def bare(offset=60.0, phase=0.0):
    """Ego alone on the eastbound approach."""
    return ScenarioGenome("E_in", offset, ("E_in", "E_out"), light_phase_offset=phase)


def law38_rho(states):
    return rho(normalize(LAW38.law), trace_from_states(states, KEYS38))


class TestMaps:
    @pytest.mark.parametrize("signalized", [True, False])
    def test_bundled_files_match_generator(self, signalized):
        data = t_junction(signalized)
        on_disk = json.loads((BUNDLED_DIR / f"{data['name']}.json").read_text())
        assert on_disk == json.loads(json.dumps(data))

    def test_junction_features(self):
        m = load_map()
        assert {s.id for s in m.stoplines} == {"SL_E", "SL_W", "SL_S"}
        assert len(m.crosswalks) == 3 and len(m.signal_heads) == 3
        assert m.expand_route(["E_in", "E_out"]) == ("E_in", "J_E_E", "E_out")

    def test_unknown_map(self):
        with pytest.raises(FileNotFoundError):
            load_map("atlantis")

    def test_map_dir_override(self, tmp_path, monkeypatch):
        (tmp_path / "mine.json").write_text(json.dumps(t_junction(False)))
        monkeypatch.setenv("LAWFUZZ_MAP_DIR", str(tmp_path))
        assert load_map("mine").name == "t_junction_unsignalized"


class TestLightCycle:
    def test_main_and_side_groups(self):
        lc = LightCycle(5, 2, 4)
        main = [lc.state("main", t).color[0] for t in range(11)]
        side = [lc.state("side", t).color[0] for t in range(11)]
        assert "".join(main) == "gggggyyrrrr"
        assert "".join(side) == "rrrrrrrggyy"

    def test_blinking(self):
        lc = LightCycle(1, 3, 4, blink_yellow=True)
        assert lc.state("main", 1).blinking and not lc.state("main", 0).blinking

    def test_validation(self):
        with pytest.raises(ValueError):
            LightCycle(0, 1, 2)
        with pytest.raises(ValueError):
            SimConfig(steps=0)

    def test_config_round_trip(self):
        cfg = SimConfig(steps=120, dt=0.05, light_cycle=LightCycle(7, 3, 9))
        assert SimConfig.from_json(cfg.to_json()) == cfg

    def test_template_override(self):
        assert SIM38.light_cycle == LightCycle(450, 30, 450)
        assert sim_config_for(load_entry("law42").template).light_cycle.blink_yellow


class TestGenome:
    def test_json_round_trip(self):
        g = random_genome(LAW38.template, np.random.default_rng(0))
        assert ScenarioGenome.from_json(json.loads(g.dumps())) == g

    def test_malformed_json(self):
        with pytest.raises(GenomeError):
            ScenarioGenome.from_json({"ego_route": []})

    def test_random_genomes_validate(self):
        m = load_map()
        for s in range(100):
            check_genome(random_genome(LAW38.template, np.random.default_rng(s)), LAW38.template, m)

    def test_rejects_moving_final_waypoint(self):
        g = random_genome(LAW38.template, np.random.default_rng(1))
        track = g.npc_tracks[0]
        bad = track[:-1] + (Waypoint(track[-1].lane_id, track[-1].offset, 5.0),)
        g2 = replace(g, npc_tracks=(bad,) + g.npc_tracks[1:])
        with pytest.raises(GenomeError, match="final waypoint"):
            check_genome(g2, LAW38.template, load_map())

    def test_unknown_lane_names_field(self):
        g = ScenarioGenome("E_in", 10.0, ("E_in", "Nowhere"))
        with pytest.raises(GenomeError) as exc:
            simulate(g, get_driver("lawful"), SimConfig(steps=5))
        assert exc.value.path == "ego_route[1]"

    def test_template_validation(self):
        d = json.loads((LAW38.template_path).read_text())
        d["npcs"][0]["offsets"][0] = [0, 500]
        with pytest.raises(GenomeError):
            ScenarioTemplate.from_json(d).validate(load_map())


class TestEngine:
    def test_length_and_determinism(self):
        g = random_genome(LAW38.template, np.random.default_rng(4))
        a = simulate(g, get_driver("aggressive"), SIM38, seed=11)
        b = simulate(g, get_driver("aggressive"), SIM38, seed=11)
        assert len(a) == SIM38.steps
        assert a == b

    def test_reaches_cruise_and_keeps_lane(self):
        states = simulate(bare(phase=0.0), get_driver("lawful"), SimConfig(steps=80, light_cycle=LightCycle(900, 30, 900)))
        assert max(w.ego.speed for w in states) == pytest.approx(get_driver("lawful").cruise)
        assert all(abs(w.ego.position[1] + 1.75) < 1e-9 for w in states)

    def test_bounded_acceleration(self):
        for name in ("lawful", "aggressive"):
            g = random_genome(LAW38.template, np.random.default_rng(9))
            states = simulate(g, get_driver(name), SIM38, seed=2)
            dv = np.diff([w.ego.speed / 3.6 for w in states])
            assert np.all(np.abs(dv) <= MAX_ACCEL * SIM38.dt + 1e-9)

    def test_npcs_stay_on_their_lanes(self):
        g = random_genome(LAW38.template, np.random.default_rng(5))
        m = load_map()
        for w in simulate(g, get_driver("lawful"), SIM38, seed=0)[::10]:
            for n in w.npcs:
                _, lat = m.lane(n.lane_id).centerline.project(n.position)
                assert abs(lat) < 1e-6

    def test_rushing_the_yellow(self):
        # phase picked so the light turns yellow a few seconds before arrival
        states = simulate(bare(phase=430.0), get_driver("aggressive"), SIM38)
        assert law38_rho(states) < 0
        (crossing,) = red_light_crossings(states)
        assert crossing["stopline"] == "SL_E"
        t = crossing["t"]
        assert states[t].lights["H_E"].color == "red"
        # front bumper passes x = -9 exactly at that step
        fronts = [w.ego.position[0] + w.ego.length / 2 for w in states[t - 1 : t + 1]]
        assert fronts[0] < -9.0 <= fronts[1]

    def test_lawful_on_the_same_scenario(self):
        states = simulate(bare(phase=430.0), get_driver("lawful"), SIM38)
        assert law38_rho(states) >= 0
        assert red_light_crossings(states) == []

    def test_accident_detection(self):
        states = simulate(bare(), get_driver("lawful"), SimConfig(steps=30))
        assert find_accidents(states) == []
        w = states[0]
        crowded = replace(w, pedestrians=(Pedestrian("p0", w.ego.position, 0.0),))
        assert find_accidents([crowded]) == [{"t": 0, "agent": "p0", "kind": "pedestrian"}]


class TestDrivers:
    def test_builtin_names(self):
        names = [n for n, _ in builtin_drivers()]
        assert {"lawful", "aggressive"} <= set(names)

    def test_unknown_driver(self):
        with pytest.raises(ValueError):
            get_driver("reckless")

    def test_lawful_stops_for_a_late_yellow_then_clears(self):
        # yellow lands while creeping a few cm before the line in thick fog; this
        # genome broke law38 before the driver learned to stop and then clear
        doc = json.loads((DATA / "lawful_yellow_at_the_line.genome.json").read_text())
        g, sim = ScenarioGenome.from_json(doc["genome"]), SimConfig.from_json(doc["replay"]["sim"])
        states = simulate(g, get_driver("lawful"), sim, seed=doc["replay"]["sim_seed"])
        assert law38_rho(states) >= 0
        speeds = [w.ego.speed for w in states]
        stop = next(t for t in range(1, len(states)) if states[t].lights["H_E"].color == "yellow" and speeds[t] < 0.5)
        assert max(speeds[stop + 1 : stop + 3]) > 0.5

    def test_lawful_never_breaks_law38(self):
        driver = get_driver("lawful")
        worst = math.inf
        for s in range(100):
            g = random_genome(LAW38.template, np.random.default_rng(1000 + s))
            worst = min(worst, law38_rho(simulate(g, driver, SIM38, seed=s)))
        assert worst >= -1e-6
