"""Simulation-backed objectives and the GA+PSO controller synthesis pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import ga as _ga
from . import pso as _pso
from .fluid import NetworkParams, SimulationError
from .neural import INTEGRAL_GAIN_BOUNDS, WEIGHT_BOUNDS, RbfSpec, make_controller
from .scenarios import Scenario, get_scenario, simulate

#: Horizon (s) of the closed-loop run scored during weight tuning.
TUNING_HORIZON = 50.0


@dataclass(frozen=True)
class InnerBudget:
    """PSO budget spent on each candidate structure inside the GA."""

    particles: int = 10
    iterations: int = 50
    horizon: float = 20.0


def parameter_bounds(n: int, integral: bool) -> tuple[np.ndarray, np.ndarray]:
    lo = [WEIGHT_BOUNDS[0]] * n
    hi = [WEIGHT_BOUNDS[1]] * n
    if integral:
        lo.append(INTEGRAL_GAIN_BOUNDS[0])
        hi.append(INTEGRAL_GAIN_BOUNDS[1])
    return np.array(lo), np.array(hi)


def velocity_limits(n: int, integral: bool, max_velocity: float = 4.0) -> np.ndarray:
    """Per-dimension speed limits, expressed relative to each half-range."""
    lo, hi = parameter_bounds(n, integral)
    return max_velocity * (hi - lo) / 2.0


class TrackingObjective:
    """Queue-tracking cost of an RBF controller as a function of its parameters.

    ``metric`` is ``"iae"`` (time-averaged ``|e|``) or ``"mse"`` (mean of
    ``e**2`` over the sampled run).
    """

    def __init__(self, template: RbfSpec, integral: bool, scenario: Scenario | None = None,
                 base: NetworkParams = NetworkParams(), horizon: float = TUNING_HORIZON,
                 metric: str = "iae", control_period: float = 1.0 / 160.0):
        if metric not in ("iae", "mse"):
            raise ValueError("metric must be 'iae' or 'mse'")
        self.template = template
        self.integral = integral
        self.scenario = scenario or get_scenario("s1")
        self.params = replace(self.scenario.network(base), horizon=horizon)
        self.metric = metric
        self.control_period = control_period
        self.evaluations = 0

    def spec(self, x) -> RbfSpec:
        spec = self.template.with_parameters(x)
        if not self.integral:
            spec = replace(spec, integral_gain=0.0)
        return spec

    def run(self, x):
        ctrl = make_controller(self.spec(x), self.scenario.q_target, self.control_period,
                               self.params.buffer)
        return simulate(self.params, ctrl, q_target=self.scenario.q_target,
                        scenario=self.scenario.name)

    def __call__(self, x) -> float:
        self.evaluations += 1
        try:
            run = self.run(x)
        except SimulationError:
            return math.inf
        if self.metric == "iae":
            return run.summary.iae
        return float(np.mean(run.error ** 2))


def tune_weights(template: RbfSpec, integral: bool, config: _pso.PsoConfig = _pso.PsoConfig(),
                 horizon: float = TUNING_HORIZON, base: NetworkParams = NetworkParams(),
                 scenario: Scenario | None = None, callback=None) -> tuple[RbfSpec, _pso.PsoResult]:
    """PSO over output weights (and integral gain) minimising IAE."""
    objective = TrackingObjective(template, integral, scenario, base, horizon)
    bounds = parameter_bounds(template.n, integral)
    vmax = velocity_limits(template.n, integral, config.max_velocity)
    result = _pso.optimize(objective, bounds, config, max_velocity=vmax, callback=callback)
    return objective.spec(result.best_position), result


def _derived_seed(seed: int, n: int) -> int:
    return int(np.random.SeedSequence([seed, n]).generate_state(1)[0])


class StructureFitness:
    """GA fitness of a neuron count: tune weights with a small PSO, score ``1/MSE^2``."""

    def __init__(self, integral: bool = True, budget: InnerBudget = InnerBudget(),
                 pso: _pso.PsoConfig = _pso.PsoConfig(), base: NetworkParams = NetworkParams(),
                 scenario: Scenario | None = None, seed: int = 0):
        self.integral = integral
        self.budget = budget
        self.pso = pso
        self.base = base
        self.scenario = scenario
        self.seed = seed
        self.tuned: dict[int, RbfSpec] = {}

    def __call__(self, n: int) -> float:
        template = RbfSpec.evenly_spaced(n)
        cfg = replace(self.pso, swarm_size=self.budget.particles,
                      max_iterations=self.budget.iterations, seed=_derived_seed(self.seed, n))
        spec, _ = tune_weights(template, self.integral, cfg, self.budget.horizon, self.base,
                               self.scenario)
        self.tuned[n] = spec
        mse_obj = TrackingObjective(spec, self.integral, self.scenario, self.base,
                                    self.budget.horizon, metric="mse")
        params = list(spec.weights) + ([spec.integral_gain] if self.integral else [])
        return _ga.fitness_from_mse(mse_obj(params))


@dataclass
class PipelineResult:
    spec: RbfSpec
    ga: _ga.GaResult
    pso: _pso.PsoResult


def ga_pso(ga_config: _ga.GaConfig = _ga.GaConfig(), pso_config: _pso.PsoConfig = _pso.PsoConfig(),
           integral: bool = True, budget: InnerBudget = InnerBudget(),
           horizon: float = TUNING_HORIZON, base: NetworkParams = NetworkParams(),
           scenario: Scenario | None = None) -> PipelineResult:
    """Pick the neuron count by GA, then tune its weights with a full-budget PSO."""
    fitness = StructureFitness(integral, budget, pso_config, base, scenario, ga_config.seed)
    ga_result = _ga.evolve(ga_config, fitness)
    template = RbfSpec.evenly_spaced(ga_result.best_n)
    spec, pso_result = tune_weights(template, integral, pso_config, horizon, base, scenario)
    return PipelineResult(spec, ga_result, pso_result)
