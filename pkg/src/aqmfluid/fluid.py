"""Fluid-flow model of TCP windows and a single bottleneck queue.

The plant is the classic delayed pair of ODEs for the mean congestion window
``W`` and the bottleneck backlog ``q``::

    dW/dt = 1/R(t) - W(t) W(t - R(t)) / (2 R(t - R(t))) * p
    dq/dt = -C + N(t) W(t) / R(t)        (never negative while q == 0)

with ``R = q/C + Tp``. Integration is fixed-step explicit Euler. The scalar
pieces are numba-compiled so that the closed-loop kernel in
:mod:`aqmfluid._kernel` and the step-by-step reference path below share one
implementation.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

from numba import njit

#: Smallest admissible mean window (packets); keeps W > 0 under Euler overshoot.
W_FLOOR = 1e-3


class SimulationError(RuntimeError):
    """Raised when the integrator produces a non-finite derivative."""


@dataclass(frozen=True)
class NetworkParams:
    """Static plant constants.

    ``n_profile`` is a tuple of ``(start_time, connections)`` pairs; the first
    entry must start at 0 and the count stays constant until the next entry.
    """

    capacity: float = 1250.0
    prop_delay: float = 0.06
    buffer: float = 300.0
    packet_size: int = 1000
    horizon: float = 100.0
    dt: float = 1e-3
    n_profile: tuple = ((0.0, 100),)
    w0: float = 1.0
    q0: float = 0.0
    delayed_drop_probability: bool = False
    overflow_drops: bool = True

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError("capacity must be positive")
        if not self.prop_delay > 0:
            raise ValueError("prop_delay must be positive")
        if not self.buffer > 0:
            raise ValueError("buffer must be positive")
        if not (0 < self.dt <= self.horizon):
            raise ValueError("dt must satisfy 0 < dt <= horizon")
        if not self.w0 > 0:
            raise ValueError("w0 must be positive")
        if not 0 <= self.q0 <= self.buffer:
            raise ValueError("q0 must lie in [0, buffer]")
        profile = tuple((float(t), int(n)) for t, n in self.n_profile)
        if not profile or profile[0][0] != 0.0:
            raise ValueError("n_profile must start at t=0")
        times = [t for t, _ in profile]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("n_profile changepoints must be strictly increasing")
        if any(n < 1 for _, n in profile):
            raise ValueError("every connection count must be >= 1")
        object.__setattr__(self, "n_profile", profile)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def connections(self, t: float) -> int:
        """Connection count N(t) of the piecewise-constant profile."""
        times = [s for s, _ in self.n_profile]
        i = bisect.bisect_right(times, t + 1e-12) - 1
        return self.n_profile[max(i, 0)][1]

    def with_connections(self, n: int) -> "NetworkParams":
        return replace(self, n_profile=((0.0, n),))


@dataclass
class FluidState:
    """Instantaneous plant state; ``forced_drops`` is the cumulative overflow."""

    t: float
    W: float
    q: float
    R: float
    forced_drops: float = 0.0

    @classmethod
    def initial(cls, params: NetworkParams) -> "FluidState":
        return cls(0.0, params.w0, params.q0, rtt(params.q0, params.capacity, params.prop_delay))


@dataclass
class HistoryBuffer:
    """Past ``(t, W, R, p)`` samples with linear interpolation.

    Queries before the first sample return the initial condition
    ``(w_init, r_init)``.
    """

    w_init: float
    r_init: float
    retain: float = math.inf
    t: list = field(default_factory=list)
    W: list = field(default_factory=list)
    R: list = field(default_factory=list)
    p: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: NetworkParams) -> "HistoryBuffer":
        retain = params.buffer / params.capacity + params.prop_delay + 1.0
        return cls(params.w0, rtt(params.q0, params.capacity, params.prop_delay), retain)

    def __len__(self):
        return len(self.t)

    def append(self, t, W, R, p=0.0):
        if self.t and t <= self.t[-1]:
            raise ValueError("history sample times must be strictly increasing")
        self.t.append(t)
        self.W.append(W)
        self.R.append(R)
        self.p.append(p)
        self._evict(t - self.retain)

    def _evict(self, before):
        # keep one sample at or before the cutoff so lookups stay bracketed
        i = bisect.bisect_right(self.t, before) - 1
        if i > 0:
            del self.t[:i], self.W[:i], self.R[:i], self.p[:i]

    def _interp(self, series, tau, before_start):
        if not self.t:
            raise ValueError("history is empty")
        if tau > self.t[-1] + 1e-12:
            raise ValueError(f"lookup at t={tau} is later than the newest sample t={self.t[-1]}")
        if tau < self.t[0]:
            return before_start
        i = bisect.bisect_right(self.t, tau) - 1
        if i >= len(self.t) - 1:
            return series[-1]
        t0, t1 = self.t[i], self.t[i + 1]
        frac = (tau - t0) / (t1 - t0)
        return series[i] + frac * (series[i + 1] - series[i])

    def lookup(self, tau: float) -> tuple[float, float]:
        """Return interpolated ``(W, R)`` at time ``tau``."""
        return (
            self._interp(self.W, tau, self.w_init),
            self._interp(self.R, tau, self.r_init),
        )

    def lookup_p(self, tau: float) -> float:
        first = self.p[0] if self.p else 0.0
        return self._interp(self.p, tau, first)


@njit(cache=True)
def rtt(q, capacity, prop_delay):
    """Round-trip time ``q/C + Tp`` in seconds."""
    return q / capacity + prop_delay


@njit(cache=True)
def sat(u):
    if u >= 1.0:
        return 1.0
    if u >= 0.0:
        return u
    return 0.0


def saturate(u: float) -> float:
    """Clamp a raw control signal to a probability in [0, 1].

    Raises
    ------
    ValueError
        If ``u`` is NaN or infinite.
    """
    if not math.isfinite(u):
        raise ValueError(f"control signal must be finite, got {u!r}")
    return sat(u)


@njit(cache=True)
def window_derivative(W, R, W_d, R_d, p):
    """dW/dt given current and delayed (W, R) and the drop probability."""
    return 1.0 / R - W * W_d / (2.0 * R_d) * p


@njit(cache=True)
def queue_derivative(q, W, R, n, capacity):
    """dq/dt; an empty queue cannot drain further."""
    dq = -capacity + n * W / R
    if q <= 0.0 and dq < 0.0:
        return 0.0
    return dq


@njit(cache=True)
def applied_probability(p, q, buffer, overflow_drops):
    """Probability seen by the sources: a full buffer drops everything."""
    if overflow_drops and q >= buffer:
        return 1.0
    return p


@njit(cache=True)
def euler_update(W, q, dW, dq, dt, buffer):
    """Advance one Euler step; returns ``(W, q, overflow)``."""
    W_new = W + dt * dW
    if W_new < W_FLOOR:
        W_new = W_FLOOR
    q_new = q + dt * dq
    overflow = 0.0
    if q_new > buffer:
        overflow = q_new - buffer
        q_new = buffer
    elif q_new < 0.0:
        q_new = 0.0
    return W_new, q_new, overflow


def step(state: FluidState, history: HistoryBuffer, p: float, params: NetworkParams,
         n: int | None = None) -> FluidState:
    """Advance the plant by ``params.dt`` under drop probability ``p``.

    The current sample is appended to ``history`` before the delayed terms
    are read. Overflow beyond the buffer is clipped and added to
    ``forced_drops``.
    """
    if n is None:
        n = params.connections(state.t)
    C, B = params.capacity, params.buffer
    p_app = applied_probability(p, state.q, B, params.overflow_drops)
    history.append(state.t, state.W, state.R, p_app)
    tau = state.t - state.R
    W_d, R_d = history.lookup(tau)
    p_w = history.lookup_p(tau) if params.delayed_drop_probability else p_app
    dW = window_derivative(state.W, state.R, W_d, R_d, p_w)
    dq = queue_derivative(state.q, state.W, state.R, n, C)
    if not (math.isfinite(dW) and math.isfinite(dq)):
        raise SimulationError(
            f"non-finite derivative at t={state.t:.6f}: dW={dW}, dq={dq}, "
            f"W={state.W}, q={state.q}, p={p}"
        )
    W, q, overflow = euler_update(state.W, state.q, dW, dq, params.dt, B)
    return FluidState(
        t=state.t + params.dt,
        W=W,
        q=q,
        R=rtt(q, C, params.prop_delay),
        forced_drops=state.forced_drops + overflow,
    )


def equilibrium(params: NetworkParams, q_star: float, n: int | None = None) -> tuple[float, float, float]:
    """Operating point ``(W*, R*, p*)`` that holds the queue at ``q_star``."""
    if n is None:
        n = params.connections(0.0)
    R = rtt(q_star, params.capacity, params.prop_delay)
    W = R * params.capacity / n
    return W, R, 2.0 / W**2
