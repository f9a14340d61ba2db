"""
Six queue disciplines on one bottleneck
=======================================

100 long-lived flows share a 1250 packet/s link with a 300 packet buffer.
Every discipline starts from an empty queue and tries to hold it at 150.
"""
import numpy as np

from aqmfluid import run_scenario

print(f"{'controller':>10} {'q(10s)':>8} {'q(100s)':>8} {'IAE':>8} {'loss':>7} {'settle':>7}")
for name in ("droptail", "pi", "rem", "ared", "rbf", "irbf"):
    run = run_scenario("s1", name)
    s = run.summary
    q10 = run.q[np.searchsorted(run.t, 10.0)]
    print(f"{name:>10} {q10:8.1f} {run.q[-1]:8.1f} {s.iae:8.2f} {s.loss_rate:7.3f} "
          f"{s.settling_time:7.2f}")

# Drop Tail parks the queue at the buffer edge and flips between no drops and
# dropping everything; the oscillation flag picks that up
print("Drop Tail oscillating:", run_scenario("s1", "droptail").summary.oscillating)

# the plain RBF controller has a steady offset that the integral term removes
rbf, irbf = run_scenario("s1", "rbf"), run_scenario("s1", "irbf")
print(f"final offset: rbf {rbf.q[-1] - 150:+.2f}, irbf {irbf.q[-1] - 150:+.4f}")

# shorter and longer round trips
for scn in ("s3-short", "s3-long"):
    for name in ("pi", "ared", "irbf"):
        print(scn, name, run_scenario(scn, name).summary.line())
