"""Genetic search over the hidden-layer size of an RBF controller.

The genome is one real number decoded to a neuron count by rounding. Each
generation keeps the elites verbatim and fills the rest with blend-crossover
and Gaussian-mutation children drawn by stochastic uniform sampling on
rank-scaled fitness. Mutation strength shrinks linearly over the run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

#: Fitness reported for a perfect (zero-MSE) controller.
FITNESS_CAP = 1e12


@dataclass(frozen=True)
class GaConfig:
    population: int = 40
    elite_count: int = 2
    crossover_count: int = 26
    mutation_count: int = 12
    crossover_fraction: float = 0.7
    shrink: float = 1.0
    generations: int = 15
    neuron_range: tuple = (2, 12)
    sigma0: float = 2.0
    seed: int = 0

    def __post_init__(self):
        counts = (self.elite_count, self.crossover_count, self.mutation_count)
        if any(c <= 0 for c in counts):
            raise ValueError("elite, crossover and mutation counts must be positive")
        if sum(counts) != self.population:
            raise ValueError("elite + crossover + mutation must equal the population size")
        lo, hi = self.neuron_range
        if not 1 <= lo <= hi:
            raise ValueError("neuron_range must satisfy 1 <= lo <= hi")
        if self.generations < 1:
            raise ValueError("need at least one generation")
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be non-negative")
        object.__setattr__(self, "neuron_range", (int(lo), int(hi)))


def decode(genome: float, neuron_range=(2, 12)) -> int:
    """Round a genome to a neuron count inside ``neuron_range``."""
    lo, hi = neuron_range
    return int(min(max(math.floor(genome + 0.5), lo), hi))


def fitness_from_mse(mse: float) -> float:
    """``F = 1 / MSE**2``, capped at :data:`FITNESS_CAP` for a zero MSE."""
    if mse < 0 or math.isnan(mse):
        raise ValueError("MSE must be a non-negative number")
    if mse == 0:
        return FITNESS_CAP
    return min(1.0 / mse**2, FITNESS_CAP)


def _ranking(fitness, genomes) -> list[int]:
    # best first; ties go to the smaller genome, then the lower index
    return sorted(range(len(fitness)), key=lambda i: (-fitness[i], genomes[i], i))


def rank_scale(fitness, genomes=None) -> np.ndarray:
    """Scores that depend only on rank: ``1/sqrt(r)`` with ``r = 1`` for the best."""
    fitness = [float(f) for f in fitness]
    if not all(map(math.isfinite, fitness)):
        raise ValueError("fitness values must be finite")
    genomes = list(range(len(fitness))) if genomes is None else list(genomes)
    scores = np.empty(len(fitness))
    for r, i in enumerate(_ranking(fitness, genomes), start=1):
        scores[i] = 1.0 / math.sqrt(r)
    return scores


def select_parents(scores, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stochastic uniform sampling: ``count`` evenly spaced pointers on one wheel."""
    scores = np.asarray(scores, dtype=float)
    if np.any(scores < 0) or not scores.sum() > 0:
        raise ValueError("scores must be non-negative and not all zero")
    edges = np.cumsum(scores)
    spacing = edges[-1] / count
    pointers = rng.uniform(0.0, spacing) + spacing * np.arange(count)
    picks = np.searchsorted(edges, pointers, side="right")
    picks = np.minimum(picks, len(scores) - 1)
    return rng.permutation(picks)


def crossover(a: float, b: float, rng: np.random.Generator | None = None, lam: float | None = None) -> float:
    """Arithmetic blend ``lam*a + (1-lam)*b`` with ``lam ~ U[0, 1]``."""
    if lam is None:
        lam = rng.random()
    return b + lam * (a - b)  # equals lam*a + (1-lam)*b, exact when a == b


def mutation_sigma(generation: int, config: GaConfig) -> float:
    return config.sigma0 * (1.0 - config.shrink * generation / config.generations)


def mutate(genome: float, generation: int, config: GaConfig, rng: np.random.Generator) -> float:
    """Gaussian perturbation with the shrinking schedule, clamped to the range."""
    sigma = max(mutation_sigma(generation, config), 0.0)
    if sigma > 0:
        genome = genome + rng.normal(0.0, sigma)
    lo, hi = config.neuron_range
    return float(min(max(genome, lo), hi))


@dataclass
class Generation:
    index: int
    genomes: list
    fitness: list
    composition: tuple  # (elites, crossover children, mutation children)

    @property
    def best(self) -> int:
        return max(range(len(self.fitness)), key=lambda i: (self.fitness[i], -self.genomes[i], -i))


@dataclass
class GaResult:
    best_n: int
    best_fitness: float
    trace: list = field(default_factory=list)  # (generation, best_n, best_F)
    generations: list = field(default_factory=list, repr=False)


def evolve(config: GaConfig, fitness_fn: Callable[[int], float], initial=None) -> GaResult:
    """Search the neuron count maximising ``fitness_fn(n)``.

    ``fitness_fn`` is called at most once per distinct neuron count; its
    values are cached, so elites keep their scores across generations.
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = config.neuron_range
    cache: dict[int, float] = {}

    def score(genome):
        n = decode(genome, config.neuron_range)
        if n not in cache:
            cache[n] = float(fitness_fn(n))
        return cache[n]

    if initial is None:
        genomes = list(rng.uniform(lo, hi, config.population))
    else:
        genomes = [float(g) for g in initial]
        if len(genomes) != config.population:
            raise ValueError("initial population has the wrong size")
    history = [Generation(0, genomes, [score(g) for g in genomes], (0, 0, 0))]

    for g in range(config.generations):
        cur = history[-1]
        order = _ranking(cur.fitness, cur.genomes)
        scores = rank_scale(cur.fitness, cur.genomes)
        elites = [cur.genomes[i] for i in order[:config.elite_count]]
        parents = select_parents(scores, 2 * config.crossover_count + config.mutation_count, rng)
        pairs = parents[:2 * config.crossover_count].reshape(-1, 2)
        xkids = [crossover(cur.genomes[a], cur.genomes[b], rng) for a, b in pairs]
        mkids = [mutate(cur.genomes[i], g, config, rng)
                 for i in parents[2 * config.crossover_count:]]
        genomes = elites + xkids + mkids
        history.append(Generation(g + 1, genomes, [score(x) for x in genomes],
                                  (len(elites), len(xkids), len(mkids))))

    trace = []
    for gen in history:
        b = gen.best
        trace.append((gen.index, decode(gen.genomes[b], config.neuron_range), gen.fitness[b]))
    _, best_n, best_f = trace[-1]
    return GaResult(best_n, best_f, trace, history)
