"""
Tuning RBF output weights with a particle swarm
===============================================

Start from zero weights on five Gaussians and let PSO minimise the tracking
error of a 50 s run. Takes a few seconds per hundred iterations.
"""
from aqmfluid import RbfSpec, run_scenario
from aqmfluid.pso import PsoConfig
from aqmfluid.tuning import tune_weights


def progress(k, best, swarm):
    if (k + 1) % 50 == 0:
        print(f"iteration {k + 1:4d}: best IAE {best:.4f}")


template = RbfSpec.evenly_spaced(5)
spec, result = tune_weights(template, integral=True, config=PsoConfig(seed=7), callback=progress)
print("initial best:", result.trace[0])
print("weights:", ", ".join(f"{w:+.3f}" for w in spec.weights))
print("integral gain:", spec.integral_gain)

# score the tuned controller on the full 100 s scenario
print(run_scenario("s1", "irbf", rbf=spec).summary.line())
