"""
Holding the queue at an operating point
=======================================

Solve for the window and drop probability that keep 100 flows' backlog at
150 packets, then check that an open-loop run started there stays put.
"""
import numpy as np

from aqmfluid import NetworkParams, equilibrium, simulate
from aqmfluid.controllers import ConstantProbability

net = NetworkParams()
W, R, p = equilibrium(net, q_star=150.0)
print(f"W* = {W:.4f} packets, R* = {R:.3f} s, p* = {p:.5f}")

# start exactly at the operating point and hold p fixed
run = simulate(NetworkParams(w0=W, q0=150.0), ConstantProbability(p))
print("largest queue deviation over 100 s:", np.max(np.abs(run.q - 150.0)))

# from an empty queue the same p still lands on 150, after a transient
cold = simulate(net, ConstantProbability(p))
for t in (0.5, 1, 2, 5, 20):
    i = np.searchsorted(cold.t, t)
    print(f"t = {t:5.1f} s   q = {cold.q[i]:7.2f}   W = {cold.W[i]:.3f}")

# halving the step barely moves the answer
fine = simulate(NetworkParams(dt=5e-4, horizon=20.0), ConstantProbability(p))
print("final q with dt = 0.5 ms:", fine.q[-1])
