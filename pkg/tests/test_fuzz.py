import math
from dataclasses import replace

import numpy as np
import pytest

from lawfuzz.corpus import load_entry
from lawfuzz.formula import Always, Atom, Comparison, Interval, Num, SignalRef, normalize
from lawfuzz.fuzz import (
    CATEGORIES,
    FuzzConfig,
    FuzzState,
    crossover,
    falsify,
    fuzz,
    mutate,
    random_genome,
    run_campaign,
    select_parents,
)
from lawfuzz.robustness import rho
from lawfuzz.sim.drivers import get_driver
from lawfuzz.sim.engine import SimConfig, sim_config_for
from lawfuzz.sim.genome import TemplateMismatchError, check_genome
from lawfuzz.sim.maps import load_map

T = load_entry("law38").template
MAP = load_map()
SHORT = replace(sim_config_for(T), steps=60)


def genome(seed):
    return random_genome(T, np.random.default_rng(seed))


def speed(op, v):
    return Atom(Comparison(SignalRef("speed"), op, Num(v)))


class Rigged:
    """Stand-in generator replaying scripted draws."""

    def __init__(self, ints=(), floats=None):
        self.ints = list(ints)
        self.floats = floats

    def integers(self, n):
        v = self.ints.pop(0)
        assert 0 <= v < n
        return v

    def random(self, size=None):
        return np.asarray(self.floats, dtype=float)


def state_with(robust):
    s = FuzzState(tuple(range(len(robust))), list(range(len(robust))))
    for i, r in enumerate(robust):
        s.seeds[i] = genome(i)
        s.robust[i] = r
    return s


class TestConfig:
    @pytest.mark.parametrize(
        "kw", [{"population_size": 3}, {"population_size": 0}, {"max_generations": 0}, {"mutation_prob": 1.5}, {"engine": "x"}]
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            FuzzConfig(**kw)

    def test_defaults(self):
        cfg = FuzzConfig()
        assert (cfg.population_size, cfg.max_generations, cfg.crossover_prob, cfg.mutation_prob) == (20, 20, 0.6, 0.2)


class TestSelection:
    def test_single_seed_repeats(self):
        s = state_with([-3.0])
        assert select_parents(s, 4, np.random.default_rng(0)) == [s.seeds[0]] * 4

    def test_pair_keeps_the_more_robust(self):
        s = state_with([-1.0, -5.0, -9.0, -20.0])
        # top-half entrant 0 (rho -1) against global entrant 3 (rho -20)
        assert select_parents(s, 1, Rigged([0, 3])) == [s.seeds[0]]
        # top-half entrant 1 (rho -5) against global entrant 0 (rho -1)
        assert select_parents(s, 1, Rigged([1, 0])) == [s.seeds[0]]

    def test_no_seeds(self):
        assert select_parents(FuzzState((), []), 4, np.random.default_rng(0)) == []

    def test_frequencies_match_pair_maximum(self):
        robust = [-1.0, -2.0, -4.0, -8.0, -16.0, -32.0]
        s = state_with(robust)
        k, h, draws = len(robust), len(robust) // 2, 10_000
        picked = select_parents(s, draws, np.random.default_rng(7))
        counts = [sum(p is s.seeds[j] for p in picked) for j in range(k)]

        # winner rank is min(rank_a, rank_b), rank_a uniform on the top half
        def tail(j):
            return max(0.0, (h - j) / h) * (k - j) / k

        for j in range(k):
            p = tail(j) - tail(j + 1)
            sd = math.sqrt(draws * p * (1 - p))
            assert abs(counts[j] - draws * p) <= 4 * sd + 1
        assert counts == sorted(counts, reverse=True)


class TestCrossover:
    def test_with_itself(self):
        g = genome(0)
        assert crossover(g, g, np.random.default_rng(1)) == (g, g)

    def test_weather_only(self):
        a, b = genome(0), genome(1)
        swap = [1.0] * len(CATEGORIES)
        swap[CATEGORIES.index("weather")] = 0.0
        x, y = crossover(a, b, Rigged(floats=swap))
        assert x == replace(a, weather=b.weather) and y == replace(b, weather=a.weather)

    def test_positions_never_move(self):
        a, b = genome(2), genome(3)
        x, _ = crossover(a, b, Rigged(floats=[0.0] * len(CATEGORIES)))
        assert x.ego_offset == a.ego_offset
        assert [w.offset for w in x.npc_tracks[0]] == [w.offset for w in a.npc_tracks[0]]
        assert x.pedestrian_tracks[0][0].position == a.pedestrian_tracks[0][0].position
        assert x.obstacles[0].position == a.obstacles[0].position
        assert x.light_phase_offset == b.light_phase_offset

    def test_offspring_valid(self):
        rng = np.random.default_rng(5)
        for i in range(1000):
            for g in crossover(genome(2 * i), genome(2 * i + 1), rng):
                check_genome(g, T, MAP)

    def test_template_mismatch(self):
        other = load_entry("law52").template
        with pytest.raises(TemplateMismatchError):
            crossover(genome(0), random_genome(other, np.random.default_rng(0)), np.random.default_rng(0))


class TestMutation:
    def test_zero_probability_is_identity(self):
        g = genome(4)
        assert mutate(g, T, FuzzConfig(mutation_prob=0.0), np.random.default_rng(0)) == g

    def test_clipping(self):
        g = replace(genome(4), weather={**genome(4).weather, "rain": 0.99})
        cfg = FuzzConfig(mutation_prob=1.0, gaussian_sigma_frac=50.0)
        rains = {mutate(g, T, cfg, np.random.default_rng(s)).weather["rain"] for s in range(40)}
        assert 1.0 in rains and 0.0 in rains and all(0.0 <= r <= 1.0 for r in rains)

    def test_boundary_genomes_stay_valid(self):
        lo = replace(genome(6), ego_offset=T.ego_offset[0], light_phase_offset=T.light_phase_offset[1], time_of_day=0.0)
        cfg = FuzzConfig(mutation_prob=0.5)
        rng = np.random.default_rng(3)
        for _ in range(1000):
            m = mutate(lo, T, cfg, rng)
            check_genome(m, T, MAP)
            assert all(tr[-1].speed == 0.0 for tr in m.npc_tracks)
            assert [[w.lane_id for w in tr] for tr in m.npc_tracks] == [[w.lane_id for w in tr] for tr in lo.npc_tracks]

    def test_per_gene_frequency(self):
        g = replace(genome(8), ego_offset=50.0, time_of_day=700.0, light_phase_offset=400.0)
        cfg = FuzzConfig(mutation_prob=0.2)
        rng = np.random.default_rng(11)
        n = 1000
        changed = np.zeros(3)
        for _ in range(n):
            m = mutate(g, T, cfg, rng)
            changed += [m.ego_offset != g.ego_offset, m.time_of_day != g.time_of_day, m.light_phase_offset != g.light_phase_offset]
        sd = math.sqrt(n * 0.2 * 0.8)
        assert np.all(np.abs(changed - 0.2 * n) <= 3 * sd)


class TestRandomGenome:
    def test_reproducible(self):
        assert genome(42) == genome(42)

    def test_valid(self):
        for s in range(100):
            check_genome(genome(s), T, MAP)

    def test_distinct_seeds_differ(self):
        assert len({genome(s).dumps() for s in range(50)}) == 50


class TestCampaign:
    def test_trivially_violated_law(self):
        law = Always(Interval(), speed(">", 1e6))
        st = fuzz(law, get_driver("lawful"), FuzzConfig(population_size=2, max_generations=3), SHORT, T)
        assert st.coverage == 1.0 and len(st.gamma) >= 1
        assert len(st.curve) == 1 and st.simulated == 1

    def test_empty_violation_set(self, monkeypatch):
        import lawfuzz.fuzz as fz
        from lawfuzz.violation import ViolationSet

        monkeypatch.setattr(fz, "theta", lambda f: ViolationSet((), f))
        with pytest.raises(ValueError):
            fuzz(speed(">", 0), get_driver("lawful"), FuzzConfig(), SHORT, T)

    def test_small_campaign_invariants(self):
        law = normalize(load_entry("law38").law)
        cfg = FuzzConfig(population_size=4, max_generations=3, rng_seed=5)
        a = fuzz(law, get_driver("aggressive"), cfg, SHORT, T)
        b = fuzz(law, get_driver("aggressive"), cfg, SHORT, T)
        assert [e.genome for e in a.gamma] == [e.genome for e in b.gamma]
        assert a.curve == b.curve
        covered = [c["covered"] for c in a.curve]
        assert covered == sorted(covered)
        for e in a.gamma:
            check_genome(e.genome, T, MAP)
            assert all(rho(a.elements[i], e.trace) >= 0 for i in e.covered)
        assert set(a.seeds) <= set(a.theta_remaining)

    def test_engines_spend_the_same_budget(self):
        law = normalize(load_entry("law38").law)
        base = FuzzConfig(population_size=4, max_generations=2, rng_seed=1)
        ga = fuzz(law, get_driver("aggressive"), base, SHORT, T)
        rnd = fuzz(law, get_driver("aggressive"), replace(base, engine="random"), SHORT, T)
        assert ga.simulated == rnd.simulated == 8

    def test_time_budget(self):
        law = normalize(load_entry("law38").law)
        st = fuzz(law, get_driver("lawful"), FuzzConfig(population_size=4, time_budget=0.0), SHORT, T)
        assert st.timed_out and st.simulated == 0

    def test_falsify(self):
        st = falsify(Always(Interval(), speed("<", 1.0)), get_driver("aggressive"), FuzzConfig(population_size=2), SHORT, T)
        assert st.covered == [0]
        st = falsify(Always(Interval(), speed("<", 1e6)), get_driver("aggressive"), FuzzConfig(population_size=2, max_generations=2), SHORT, T)
        assert st.covered == [] and st.simulated == 4

    def test_simulator_failure_replaces_member(self, caplog):
        class Flaky:
            calls = 0

            def policy(self, seed):
                Flaky.calls += 1
                if Flaky.calls == 1:
                    raise RuntimeError("boom")
                return get_driver("lawful").policy(seed)

        st = run_campaign([normalize(speed(">", 1e6))], T, Flaky(), FuzzConfig(population_size=2, max_generations=1), SimConfig(steps=5))
        assert st.simulated == 2
        assert "replacing" in caplog.text
