from bisect import bisect_right
from itertools import accumulate

import numpy as np
import pytest

from evoforage import (
    EvolutionParams,
    Genome,
    GenomeMismatchError,
    LayerSpec,
    crossover,
    mutate,
    next_generation,
    random_genome,
    select_parent_pair,
    spawn_phenotype,
)
from evoforage.neural import forward, init_weights, self_teach

SPEC = LayerSpec()
# a square spec whose genome holds exactly 10000 weights, handy for rate stats
BIG = LayerSpec(n_input=50, n_hidden=50, n_output=50)


def _genome(seed, spec=SPEC):
    return random_genome(spec, np.random.default_rng(seed))


def _constant_genome(value, spec=SPEC):
    g = _genome(0, spec)
    return Genome.from_flat(np.full(g.flat().size, float(value)), g)


class TestGenome:
    def test_flat_concatenation_order(self):
        g = _genome(1)
        flat = g.flat()
        n = SPEC.n_hidden * SPEC.n_input
        m = SPEC.n_output * SPEC.n_hidden
        assert flat.size == 2 * (n + m)
        assert np.array_equal(flat[:n], g.innate_action.w_ih.ravel())
        assert np.array_equal(flat[n : n + m], g.innate_action.w_ho.ravel())
        assert np.array_equal(flat[n + m : 2 * n + m], g.innate_reinforcement.w_ih.ravel())
        assert np.array_equal(flat[2 * n + m :], g.innate_reinforcement.w_ho.ravel())

    def test_from_flat_round_trip(self):
        g = _genome(2)
        back = Genome.from_flat(g.flat(), g)
        assert np.array_equal(back.innate_action.w_ih, g.innate_action.w_ih)
        assert np.array_equal(back.innate_action.w_ho, g.innate_action.w_ho)
        assert np.array_equal(back.innate_reinforcement.w_ih, g.innate_reinforcement.w_ih)
        assert np.array_equal(back.innate_reinforcement.w_ho, g.innate_reinforcement.w_ho)

    def test_from_flat_detaches_from_source_vector(self):
        g = _genome(3)
        vec = g.flat()
        built = Genome.from_flat(vec, g)
        vec[:] = 0.0
        assert np.array_equal(built.innate_action.w_ih, g.innate_action.w_ih)

    def test_copy_is_deep(self):
        g = _genome(4)
        c = g.copy()
        c.innate_action.w_ih[0, 0] += 1.0
        assert g.innate_action.w_ih[0, 0] != c.innate_action.w_ih[0, 0]

    def test_random_genome_draw_order(self):
        rng = np.random.default_rng(5)
        ref = np.random.default_rng(5)
        g = random_genome(SPEC, rng)
        want_action = init_weights(SPEC, ref)
        want_reinf = init_weights(SPEC, ref)
        assert np.array_equal(g.innate_action.w_ih, want_action.w_ih)
        assert np.array_equal(g.innate_action.w_ho, want_action.w_ho)
        assert np.array_equal(g.innate_reinforcement.w_ih, want_reinf.w_ih)
        assert np.array_equal(g.innate_reinforcement.w_ho, want_reinf.w_ho)


class TestSpawnPhenotype:
    def test_copies_values_not_storage(self):
        g = _genome(6)
        ctl = spawn_phenotype(g, learning_rate=0.25)
        assert ctl.learning_rate == 0.25
        assert np.array_equal(ctl.action.w_ih, g.innate_action.w_ih)
        assert ctl.action.w_ih is not g.innate_action.w_ih
        ctl.action.w_ih[0, 0] += 1.0
        assert ctl.action.w_ih[0, 0] != g.innate_action.w_ih[0, 0]

    def test_lifetime_learning_never_reaches_genome(self):
        g = _genome(7)
        before = g.flat()
        ctl = spawn_phenotype(g)
        for _ in range(20):
            self_teach(ctl, (1.0, 0.0, 1.0))
        assert np.array_equal(g.flat(), before)
        assert not np.array_equal(ctl.action.w_ih, g.innate_action.w_ih)


class TestSelectParentPair:
    def test_empty_population_raises(self):
        with pytest.raises(ValueError):
            select_parent_pair([], np.random.default_rng(0))

    def test_single_positive_fitness_always_wins(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            assert select_parent_pair([10, 0, 0], rng) == (0, 0)

    def test_zero_fitness_never_selected(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            i, j = select_parent_pair([2, 0, 3], rng)
            assert i != 1 and j != 1
        rng = np.random.default_rng(10)
        for _ in range(200):
            assert select_parent_pair([0, 5], rng) == (1, 1)

    def test_three_to_one_odds(self):
        rng = np.random.default_rng(11)
        picks = []
        for _ in range(5000):
            i, j = select_parent_pair([3, 1], rng)
            picks.append(i)
            picks.append(j)
        frac = picks.count(0) / len(picks)
        assert abs(frac - 0.75) < 0.02

    def test_all_zero_falls_back_to_uniform(self):
        rng = np.random.default_rng(12)
        ref = np.random.default_rng(12)
        picks = []
        for _ in range(3000):
            i, j = select_parent_pair([0, 0, 0, 0], rng)
            assert i == int(ref.integers(4))
            assert j == int(ref.integers(4))
            picks.extend((i, j))
        counts = np.bincount(picks, minlength=4) / len(picks)
        assert np.all(np.abs(counts - 0.25) < 0.02)

    def test_matches_cumulative_bisect_recipe(self):
        fitnesses = [4, 0, 1, 7, 3]
        cumulative = list(accumulate(fitnesses))
        total = sum(fitnesses)
        rng = np.random.default_rng(13)
        ref = np.random.default_rng(13)
        for _ in range(500):
            i, j = select_parent_pair(fitnesses, rng)
            assert i == min(bisect_right(cumulative, ref.random() * total), 4)
            assert j == min(bisect_right(cumulative, ref.random() * total), 4)


class TestCrossover:
    def _distinct_parents(self, spec=BIG):
        g = _genome(0, spec)
        size = g.flat().size
        p1 = Genome.from_flat(np.arange(size, dtype=float), g)
        p2 = Genome.from_flat(-np.arange(size, dtype=float) - 1.0, g)
        return p1, p2

    def test_child_holds_only_parental_values(self):
        p1, p2 = self._distinct_parents(SPEC)
        child = crossover(p1, 5, p2, 3, np.random.default_rng(14)).flat()
        a, b = p1.flat(), p2.flat()
        assert np.all((child == a) | (child == b))

    def test_fitter_parent_contributes_about_half(self):
        p1, p2 = self._distinct_parents()
        child = crossover(p1, 9, p2, 2, np.random.default_rng(15)).flat()
        frac = np.mean(child == p1.flat())
        assert abs(frac - 0.5) < 0.02

    def test_matches_documented_draw_recipe(self):
        p1, p2 = self._distinct_parents()
        a, b = p1.flat(), p2.flat()
        for f1, f2, seed in [(9, 2, 16), (2, 9, 17), (4, 4, 18)]:
            child = crossover(p1, f1, p2, f2, np.random.default_rng(seed)).flat()
            u = np.random.default_rng(seed).random(a.size)
            fitter, other = (a, b) if f1 >= f2 else (b, a)
            assert np.array_equal(child, np.where(u > 0.5, fitter, other))

    def test_equal_fitness_treats_first_parent_as_fitter(self):
        p1, p2 = self._distinct_parents()
        seed = 19
        child = crossover(p1, 6, p2, 6, np.random.default_rng(seed)).flat()
        u = np.random.default_rng(seed).random(p1.flat().size)
        assert np.array_equal(child, np.where(u > 0.5, p1.flat(), p2.flat()))

    def test_child_detached_from_parents(self):
        p1, p2 = self._distinct_parents(SPEC)
        child = crossover(p1, 1, p2, 0, np.random.default_rng(20))
        child.innate_action.w_ih[:] = 123.0
        assert not np.any(p1.innate_action.w_ih == 123.0)
        assert not np.any(p2.innate_action.w_ih == 123.0)

    def test_mismatched_shapes_raise(self):
        p1 = _genome(21, SPEC)
        p2 = _genome(22, LayerSpec(n_input=3, n_hidden=7, n_output=3))
        with pytest.raises(GenomeMismatchError):
            crossover(p1, 1, p2, 0, np.random.default_rng(23))


class TestMutate:
    PARAMS = EvolutionParams(population_size=20, mutation_rate=0.05, mutation_amplitude=0.05)

    def test_rate_zero_is_identity(self):
        g = _genome(24)
        out = mutate(g, EvolutionParams(20, 0.0, 0.05), np.random.default_rng(25))
        assert np.array_equal(out.flat(), g.flat())

    def test_rate_one_changes_everything_within_amplitude(self):
        g = _constant_genome(2.0, BIG)
        out = mutate(g, EvolutionParams(20, 1.0, 0.05), np.random.default_rng(26))
        delta = out.flat() - g.flat()
        assert np.all(delta != 0.0)
        assert np.all(np.abs(delta) <= 0.05)

    def test_mutated_fraction_near_rate(self):
        g = _constant_genome(0.0, BIG)
        assert g.flat().size == 10000
        out = mutate(g, self.PARAMS, np.random.default_rng(27))
        changed = np.mean(out.flat() != g.flat())
        assert abs(changed - 0.05) < 0.01

    def test_untouched_positions_bit_identical(self):
        g = _genome(28, BIG)
        seed = 29
        out = mutate(g, self.PARAMS, np.random.default_rng(seed))
        u = np.random.default_rng(seed).random(g.flat().size)
        mask = u < 0.05
        assert np.array_equal(out.flat()[~mask], g.flat()[~mask])
        assert np.all(np.abs(out.flat()[mask] - g.flat()[mask]) <= 0.05)

    def test_matches_documented_draw_recipe(self):
        g = _genome(30, BIG)
        seed = 31
        out = mutate(g, self.PARAMS, np.random.default_rng(seed))
        ref = np.random.default_rng(seed)
        flat = g.flat()
        u = ref.random(flat.size)
        mask = u < 0.05
        flat[mask] += -0.05 + 0.1 * ref.random(int(mask.sum()))
        assert np.array_equal(out.flat(), flat)

    def test_source_genome_untouched(self):
        g = _genome(32)
        before = g.flat()
        mutate(g, EvolutionParams(20, 1.0, 0.5), np.random.default_rng(33))
        assert np.array_equal(g.flat(), before)


class TestNextGeneration:
    def _population(self, n, seed=0, spec=SPEC):
        rng = np.random.default_rng(seed)
        return [random_genome(spec, rng) for _ in range(n)]

    def test_population_size_and_shapes_preserved(self):
        pop = self._population(6)
        params = EvolutionParams(6, 0.05, 0.05)
        kids = next_generation(pop, [3, 0, 1, 4, 0, 2], params, np.random.default_rng(34))
        assert len(kids) == 6
        for k in kids:
            assert k.innate_action.w_ih.shape == (SPEC.n_hidden, SPEC.n_input)
            assert k.innate_action.w_ho.shape == (SPEC.n_output, SPEC.n_hidden)
            assert k.innate_reinforcement.w_ih.shape == (SPEC.n_hidden, SPEC.n_input)
            assert k.innate_reinforcement.w_ho.shape == (SPEC.n_output, SPEC.n_hidden)

    def test_length_mismatch_raises(self):
        pop = self._population(4)
        params = EvolutionParams(4, 0.05, 0.05)
        with pytest.raises(ValueError):
            next_generation(pop[:3], [1, 2, 3], params, np.random.default_rng(35))
        with pytest.raises(ValueError):
            next_generation(pop, [1, 2, 3], params, np.random.default_rng(36))

    def test_all_zero_fitness_still_breeds(self):
        pop = self._population(5)
        params = EvolutionParams(5, 0.05, 0.05)
        kids = next_generation(pop, [0, 0, 0, 0, 0], params, np.random.default_rng(37))
        assert len(kids) == 5

    def test_sole_survivor_without_mutation_clones_exactly(self):
        pop = self._population(4, seed=38)
        params = EvolutionParams(4, 0.0, 0.05)
        kids = next_generation(pop, [0, 0, 7, 0], params, np.random.default_rng(39))
        want = pop[2].flat()
        for k in kids:
            assert np.array_equal(k.flat(), want)

    def test_parents_not_modified(self):
        pop = self._population(5, seed=40)
        before = [g.flat() for g in pop]
        params = EvolutionParams(5, 1.0, 0.5)
        next_generation(pop, [1, 2, 3, 4, 5], params, np.random.default_rng(41))
        for g, b in zip(pop, before):
            assert np.array_equal(g.flat(), b)

    def test_deterministic_under_seed(self):
        pop = self._population(5, seed=42)
        params = EvolutionParams(5, 0.05, 0.05)
        k1 = next_generation(pop, [1, 0, 2, 5, 3], params, np.random.default_rng(43))
        k2 = next_generation(pop, [1, 0, 2, 5, 3], params, np.random.default_rng(43))
        for a, b in zip(k1, k2):
            assert np.array_equal(a.flat(), b.flat())


class TestEvolutionParams:
    @pytest.mark.parametrize(
        "kw",
        [
            {"population_size": 0},
            {"mutation_rate": -0.1},
            {"mutation_rate": 1.1},
            {"mutation_amplitude": -0.01},
        ],
    )
    def test_rejects_bad_values(self, kw):
        base = {"population_size": 20, "mutation_rate": 0.05, "mutation_amplitude": 0.05}
        base.update(kw)
        with pytest.raises(ValueError):
            EvolutionParams(**base).validate()

    def test_boundary_rates_allowed(self):
        EvolutionParams(1, 0.0, 0.0).validate()
        EvolutionParams(1, 1.0, 0.0).validate()
