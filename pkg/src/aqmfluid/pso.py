"""Particle swarm optimisation with a linearly decaying inertia weight.

Minimises a scalar objective over a box. Each particle's random coefficients
come from its own stream, seeded by ``(seed, iteration, particle)``, so the
result does not depend on the order in which objective values are computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 20
    max_velocity: float = 4.0
    alpha1: float = 2.0
    alpha2: float = 2.0
    inertia_start: float = 0.9
    inertia_end: float = 0.2
    max_iterations: int = 300
    seed: int = 0
    per_dimension_random: bool = False

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be at least 2")
        if not self.inertia_start >= self.inertia_end > 0:
            raise ValueError("inertia must satisfy start >= end > 0")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not self.max_velocity > 0:
            raise ValueError("max_velocity must be positive")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    cost: float = math.inf
    best_position: np.ndarray = None
    best_cost: float = math.inf

    def __post_init__(self):
        if self.best_position is None:
            self.best_position = self.position.copy()


@dataclass
class PsoResult:
    best_position: np.ndarray
    best_cost: float
    trace: list = field(default_factory=list)
    particles: list = field(default_factory=list, repr=False)


def inertia(k: int, config: PsoConfig) -> float:
    """Inertia weight at iteration ``k``: linear from start to end value."""
    if config.max_iterations == 0:
        return config.inertia_start
    frac = k / config.max_iterations
    # two-weight form so both endpoints come out exactly
    return (1.0 - frac) * config.inertia_start + frac * config.inertia_end


def velocity_update(particle: Particle, global_best, k: int, config: PsoConfig,
                    rng: np.random.Generator, max_velocity=None) -> np.ndarray:
    """Inertia plus cognitive and social pulls, clamped to ``max_velocity``."""
    vmax = config.max_velocity if max_velocity is None else max_velocity
    size = particle.position.shape if config.per_dimension_random else None
    g1 = rng.random(size)
    g2 = rng.random(size)
    x = particle.position
    v = (inertia(k, config) * particle.velocity
         + config.alpha1 * g1 * (particle.best_position - x)
         + config.alpha2 * g2 * (np.asarray(global_best) - x))
    return np.clip(v, -np.asarray(vmax), np.asarray(vmax))


def position_update(particle: Particle, bounds) -> np.ndarray:
    """Move by the current velocity and clamp into ``bounds``.

    Velocity components that pushed the particle out of the box are zeroed.
    """
    lo, hi = bounds
    x = particle.position + particle.velocity
    out = (x < lo) | (x > hi)
    particle.velocity = np.where(out, 0.0, particle.velocity)
    return np.clip(x, lo, hi)


def _bounds(bounds) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0 or np.any(hi < lo):
        raise ValueError("bounds must be two equal-length vectors with lo <= hi")
    return lo, hi


def _score(value) -> float:
    value = float(value)
    return value if not math.isnan(value) else math.inf


def optimize(objective: Callable[[np.ndarray], float], bounds: Sequence, config: PsoConfig = PsoConfig(),
             max_velocity=None, map_fn=map, callback=None) -> PsoResult:
    """Minimise ``objective`` over the box ``bounds = (lo, hi)``.

    Returns the global best after ``config.max_iterations`` iterations. The
    trace holds the global-best cost after initialisation followed by one
    entry per iteration. NaN objective values count as +inf. ``map_fn`` may
    be swapped for a parallel map; evaluations within an iteration are
    independent.
    """
    lo, hi = _bounds(bounds)
    vmax = np.broadcast_to(np.asarray(config.max_velocity if max_velocity is None else max_velocity,
                                      dtype=float), lo.shape)
    swarm = []
    for i in range(config.swarm_size):
        rng = np.random.default_rng((config.seed, 0, i))
        x = lo + rng.random(lo.size) * (hi - lo)
        v = rng.uniform(-vmax / 4.0, vmax / 4.0)
        swarm.append(Particle(x, v))

    def evaluate():
        costs = list(map_fn(objective, [p.position.copy() for p in swarm]))
        for p, c in zip(swarm, costs):
            p.cost = _score(c)
            if p.cost < p.best_cost:
                p.best_cost = p.cost
                p.best_position = p.position.copy()

    evaluate()
    best = min(range(len(swarm)), key=lambda i: swarm[i].best_cost)
    g_pos, g_cost = swarm[best].best_position.copy(), swarm[best].best_cost
    trace = [g_cost]
    for k in range(config.max_iterations):
        for i, p in enumerate(swarm):
            rng = np.random.default_rng((config.seed, k + 1, i))
            p.velocity = velocity_update(p, g_pos, k, config, rng, vmax)
            p.position = position_update(p, (lo, hi))
        evaluate()
        best = min(range(len(swarm)), key=lambda i: swarm[i].best_cost)
        if swarm[best].best_cost < g_cost:
            g_pos, g_cost = swarm[best].best_position.copy(), swarm[best].best_cost
        trace.append(g_cost)
        if callback is not None:
            callback(k, g_cost, swarm)
    return PsoResult(g_pos, g_cost, trace, swarm)
