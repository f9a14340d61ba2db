"""
Flows joining and leaving
=========================

30 flows join at 30 s, 60 leave at 60 s and 30 return at 80 s. The peak
queue excursion after each change says how well each controller rides it out.
"""
import numpy as np

from aqmfluid import get_scenario, run_scenario

scn = get_scenario("s2")
edges = list(scn.changepoints) + [scn.horizon]
print("load profile:", scn.n_profile)

for name in ("pi", "ared", "rem", "irbf"):
    run = run_scenario(scn, name)
    peaks = [np.max(np.abs(run.q[(run.t >= a) & (run.t <= b)] - 150.0))
             for a, b in zip(edges, edges[1:])]
    print(f"{name:>5}: peak |q - 150| = " + ", ".join(f"{x:6.1f}" for x in peaks))

# a coarse look at the I-RBF queue around the first change
run = run_scenario(scn, "irbf")
for t in np.arange(29.0, 36.0, 1.0):
    print(f"t = {t:4.0f} s  q = {run.q[np.searchsorted(run.t, t)]:7.2f}")
