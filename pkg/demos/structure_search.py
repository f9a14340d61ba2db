"""
Choosing the number of neurons
==============================

A genetic search over the hidden-layer size. Each candidate size gets a
small PSO run and is scored by 1/MSE^2 of its queue error. A synthetic
objective with a known best of five neurons shows the search mechanics
first; the real nested search follows (about half a minute).
"""
from aqmfluid.ga import GaConfig, evolve
from aqmfluid.pso import PsoConfig
from aqmfluid.tuning import InnerBudget, ga_pso

res = evolve(GaConfig(), lambda n: float(-(n - 5) ** 2))
for gen, n, f in res.trace[:5]:
    print(f"generation {gen}: best n = {n}, fitness {f}")
print("surrogate winner:", res.best_n)

pipeline = ga_pso(GaConfig(generations=5), PsoConfig(max_iterations=100),
                  integral=True, budget=InnerBudget())
for gen, n, f in pipeline.ga.trace:
    print(f"generation {gen}: best n = {n}, F = {f:.4g}")
print("chosen size:", pipeline.spec.n)
print("weights:", ", ".join(f"{w:+.3f}" for w in pipeline.spec.weights),
      "integral gain:", pipeline.spec.integral_gain)
