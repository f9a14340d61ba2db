import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqmfluid.pso import Particle, PsoConfig, inertia, optimize, position_update, velocity_update


class FixedRng:
    """Stand-in generator returning a fixed draw."""

    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        return self.value if size is None else np.full(size, self.value)


def test_inertia_schedule():
    cfg = PsoConfig()
    assert inertia(0, cfg) == 0.9
    assert inertia(300, cfg) == 0.2
    assert inertia(150, cfg) == pytest.approx(0.55, abs=1e-15)


def test_velocity_pure_inertia_when_converged():
    x = np.array([0.3, -0.2])
    p = Particle(x.copy(), np.array([0.1, -0.4]))
    v = velocity_update(p, x, 10, PsoConfig(), np.random.default_rng(0))
    np.testing.assert_allclose(v, inertia(10, PsoConfig()) * np.array([0.1, -0.4]))


def test_velocity_example():
    x = np.zeros(2)
    p = Particle(x, np.zeros(2), best_position=np.array([1.0, 0.0]))
    v = velocity_update(p, np.array([0.0, 1.0]), 0, PsoConfig(), FixedRng(0.5))
    np.testing.assert_allclose(v, [1.0, 1.0])


def test_velocity_clamped():
    p = Particle(np.zeros(1), np.array([100.0]))
    v = velocity_update(p, np.zeros(1), 0, PsoConfig(), FixedRng(0.5))
    assert v[0] == 4.0
    p = Particle(np.zeros(1), np.array([-100.0]))
    assert velocity_update(p, np.zeros(1), 0, PsoConfig(), FixedRng(0.5))[0] == -4.0


def test_position_update_examples():
    bounds = (np.array([-1.0]), np.array([1.0]))
    p = Particle(np.array([0.5]), np.array([0.2]))
    assert position_update(p, bounds)[0] == pytest.approx(0.7)
    p = Particle(np.array([0.9]), np.array([0.5]))
    assert position_update(p, bounds)[0] == 1.0
    assert p.velocity[0] == 0.0
    p = Particle(np.array([0.25]), np.array([0.0]))
    assert position_update(p, bounds)[0] == 0.25


def sphere(x):
    return float(np.dot(x, x))


SPHERE_BOUNDS = (-np.ones(3), np.ones(3))


def test_sphere_converges():
    hits = sum(optimize(sphere, SPHERE_BOUNDS, PsoConfig(seed=s)).best_cost < 1e-4 for s in range(5))
    assert hits >= 4


def test_constant_objective():
    res = optimize(lambda x: 3.25, SPHERE_BOUNDS, PsoConfig(max_iterations=20))
    assert res.best_cost == 3.25
    assert np.all(np.abs(res.best_position) <= 1)


def test_nan_counts_as_infinite():
    def obj(x):
        return math.nan if x[0] > 0 else sphere(x)
    res = optimize(obj, SPHERE_BOUNDS, PsoConfig(max_iterations=50))
    assert math.isfinite(res.best_cost)
    assert res.best_position[0] <= 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(0, 30))
def test_trace_monotone_and_bests_consistent(seed, dim, iters):
    lo, hi = -np.ones(dim) * 2, np.ones(dim)
    def obj(x):
        return float(np.sum(np.sin(3 * x) + x**2))

    def record(k, best, swarm):
        for p in swarm:
            assert np.all(p.position >= lo) and np.all(p.position <= hi)
            assert obj(p.best_position) == p.best_cost
        assert best == min(p.best_cost for p in swarm)

    res = optimize(obj, (lo, hi), PsoConfig(seed=seed, max_iterations=iters), callback=record)
    assert len(res.trace) == iters + 1
    assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))
    assert res.best_cost == res.trace[-1] == obj(res.best_position)


def test_personal_best_is_history_minimum():
    history = {}

    def record(k, best, swarm):
        for i, p in enumerate(swarm):
            history.setdefault(i, []).append(p.cost)

    res = optimize(sphere, SPHERE_BOUNDS, PsoConfig(max_iterations=25), callback=record)
    for i, p in enumerate(res.particles):
        assert p.best_cost <= min(history[i])


def test_deterministic_and_order_independent():
    cfg = PsoConfig(seed=11, max_iterations=40)
    a = optimize(sphere, SPHERE_BOUNDS, cfg)
    b = optimize(sphere, SPHERE_BOUNDS, cfg)
    assert a.trace == b.trace

    def reversed_map(f, xs):
        return list(reversed([f(x) for x in reversed(list(xs))]))
    c = optimize(sphere, SPHERE_BOUNDS, cfg, map_fn=reversed_map)
    assert c.trace == a.trace


def test_per_dimension_random_flag():
    cfg = PsoConfig(per_dimension_random=True, max_iterations=100)
    assert optimize(sphere, SPHERE_BOUNDS, cfg).best_cost < 1e-3


def test_config_validation():
    with pytest.raises(ValueError):
        PsoConfig(swarm_size=1)
    with pytest.raises(ValueError):
        PsoConfig(inertia_start=0.1, inertia_end=0.2)
