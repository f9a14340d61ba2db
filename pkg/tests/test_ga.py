import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqmfluid.ga import (FITNESS_CAP, GaConfig, crossover, decode, evolve, fitness_from_mse,
                         mutate, mutation_sigma, rank_scale, select_parents)


def surrogate(n):
    return float(-(n - 5) ** 2)


def test_fitness_examples():
    assert fitness_from_mse(1.0) == 1.0
    assert fitness_from_mse(0.1) == pytest.approx(100.0)
    assert fitness_from_mse(0.01427) == pytest.approx(4.91e3, rel=1e-3)
    assert fitness_from_mse(0.0) == FITNESS_CAP
    with pytest.raises(ValueError):
        fitness_from_mse(math.nan)


def test_rank_scale_examples():
    np.testing.assert_allclose(rank_scale([100, 1, 10]), [1, 1 / math.sqrt(3), 1 / math.sqrt(2)])
    np.testing.assert_allclose(rank_scale([7, 7, 7, 7]), 1 / np.sqrt([1, 2, 3, 4]))
    np.testing.assert_allclose(rank_scale([-3.0, -3.0]), rank_scale([9.0, 9.0]))
    assert list(rank_scale([42.0])) == [1.0]


def test_selection_examples():
    rng = np.random.default_rng(0)
    assert set(select_parents([0, 0, 5, 0], 20, rng)) == {2}
    assert set(select_parents([1, 0], 50, rng)) == {0}
    counts = np.zeros(3)
    for seed in range(10):
        picks = select_parents([2, 1, 1], 400, np.random.default_rng(seed))
        counts += np.bincount(picks, minlength=3)
    np.testing.assert_allclose(counts, [2000, 1000, 1000], rtol=0.05)


def test_crossover_examples():
    rng = np.random.default_rng(1)
    assert crossover(4.0, 4.0, rng) == 4.0
    assert crossover(4.0, 8.0, lam=0.5) == 6.0


def test_mutation_schedule():
    cfg = GaConfig(generations=10)
    assert mutation_sigma(0, cfg) == cfg.sigma0
    assert mutation_sigma(5, cfg) == pytest.approx(cfg.sigma0 / 2)
    assert mutation_sigma(10, cfg) == 0.0
    assert mutate(6.3, 10, cfg, np.random.default_rng(0)) == 6.3


@given(st.floats(-100, 100))
def test_decode_in_range(g):
    assert 2 <= decode(g) <= 12


def test_surrogate_finds_five():
    for seed in range(3):
        res = evolve(GaConfig(seed=seed), surrogate)
        assert res.best_n == 5


def test_generation_composition_and_elitism():
    res = evolve(GaConfig(seed=4), surrogate)
    for gen in res.generations[1:]:
        assert gen.composition == (2, 26, 12)
        assert len(gen.genomes) == 40
        assert all(2 <= decode(g) <= 12 for g in gen.genomes)
    best = [f for _, _, f in res.trace]
    assert len(res.trace) == GaConfig().generations + 1
    assert all(b >= a for a, b in zip(best, best[1:]))


def test_identical_population_without_mutation_is_invariant():
    cfg = GaConfig(sigma0=0.0, generations=5)
    res = evolve(cfg, surrogate, initial=[7.2] * 40)
    for gen in res.generations:
        assert gen.genomes == [7.2] * 40


def test_fitness_called_once_per_neuron_count():
    calls = []

    def f(n):
        calls.append(n)
        return surrogate(n)
    evolve(GaConfig(seed=2), f)
    assert len(calls) == len(set(calls)) <= 11


def test_deterministic():
    a = evolve(GaConfig(seed=9), surrogate)
    b = evolve(GaConfig(seed=9), surrogate)
    assert a.trace == b.trace
    assert [g.genomes for g in a.generations] == [g.genomes for g in b.generations]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.lists(st.floats(-50, 50), min_size=11, max_size=11))
def test_elitism_on_arbitrary_fitness(seed, table):
    res = evolve(GaConfig(seed=seed, generations=6), lambda n: table[n - 2])
    best = [f for _, _, f in res.trace]
    assert all(b >= a for a, b in zip(best, best[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        GaConfig(population=41)
    with pytest.raises(ValueError):
        GaConfig(neuron_range=(5, 3))
