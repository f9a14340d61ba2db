"""Baseline queue controllers: Drop Tail, PI, REM and adaptive RED.

Every controller exposes the same small interface: ``reset(q0)`` before a run
and ``update(q, arrival_rate, h)`` once per control tick, returning a
probability in [0, 1]. ``h`` is the time since the previous tick.

The per-discipline update rules are numba functions operating on a parameter
vector and a mutable state vector; the Python classes only own those vectors.
The closed-loop kernel in :mod:`aqmfluid._kernel` calls the very same
functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .fluid import sat

# discipline codes understood by the kernel
CONSTANT, DROPTAIL, PI, REM, ARED, NEURAL, SCHEDULE = range(7)

#: Control period of the PI controller (160 Hz).
PI_PERIOD = 1.0 / 160.0


class Controller:
    """Interface shared by every queue discipline.

    Subclasses fill ``params`` and ``state`` as float64 vectors and set
    ``kind``; ``control_period`` of ``None`` means "every integration step".
    """

    name = "controller"
    kind = -1
    control_period: float | None = None

    def __init__(self):
        self.params = np.zeros(0)
        self.state = np.zeros(0)

    def initial_state(self, q0: float) -> np.ndarray:
        return np.zeros(len(self.state))

    def reset(self, q0: float = 0.0) -> None:
        self.state = self.initial_state(q0)

    def update(self, q: float, arrival_rate: float, h: float) -> float:
        from ._kernel import dispatch

        return dispatch(self.kind, self.params, self.state, q, arrival_rate, h)

    def kernel_args(self, q0: float = 0.0):
        """``(kind, params, initial state, period)`` for the compiled loop."""
        period = self.control_period if self.control_period else 0.0
        return self.kind, self.params.copy(), self.initial_state(q0), float(period)

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r})"


class ConstantProbability(Controller):
    """Open-loop controller holding a fixed probability."""

    name = "constant"
    kind = CONSTANT

    def __init__(self, p: float):
        super().__init__()
        self.params = np.array([float(p)])


class Schedule(Controller):
    """Replays a prescribed probability sequence, one value per tick.

    The last value is held once the sequence is exhausted. Mainly useful for
    property tests with random controllers.
    """

    name = "schedule"
    kind = SCHEDULE

    def __init__(self, values, control_period: float | None = None):
        super().__init__()
        self.params = np.asarray(values, dtype=float)
        if self.params.size == 0:
            raise ValueError("schedule needs at least one value")
        self.control_period = control_period
        self.state = np.zeros(1)


# --- Drop Tail -------------------------------------------------------------

@njit(cache=True)
def droptail_control(q, buffer):
    """0 below a full buffer, 1 once the buffer is full."""
    return 1.0 if q >= buffer else 0.0


class DropTail(Controller):
    name = "droptail"
    kind = DROPTAIL

    def __init__(self, buffer: float = 300.0):
        super().__init__()
        self.params = np.array([float(buffer)])


# --- PI --------------------------------------------------------------------

@dataclass(frozen=True)
class PiParams:
    a: float = 1.822e-5
    b: float = 1.816e-5
    sample_period: float = PI_PERIOD

    def __post_init__(self):
        if not self.a > self.b > 0:
            raise ValueError("PI gains must satisfy a > b > 0")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be positive")


@njit(cache=True)
def pi_control(e_k, e_km1, p_km1, a, b):
    """Incremental PI law ``p_k = p_{k-1} + a e_k - b e_{k-1}``, saturated."""
    return sat(p_km1 + a * e_k - b * e_km1)


class PIController(Controller):
    name = "pi"
    kind = PI

    def __init__(self, params: PiParams = PiParams(), q_target: float = 150.0):
        super().__init__()
        self.pi = params
        self.q_target = q_target
        self.control_period = params.sample_period
        self.params = np.array([params.a, params.b, q_target])
        self.state = np.zeros(2)  # e_{k-1}, p_{k-1}


# --- REM -------------------------------------------------------------------

@dataclass(frozen=True)
class RemParams:
    gamma: float = 0.001
    phi: float = 1.001
    alpha: float = 0.1
    q_ref: float = 0.0

    def __post_init__(self):
        if not self.phi > 1:
            raise ValueError("REM phi must exceed 1")
        if not self.gamma > 0:
            raise ValueError("REM gamma must be positive")
        if self.alpha < 0:
            raise ValueError("REM alpha must be non-negative")


@njit(cache=True)
def rem_price(price, q, arrival_rate, capacity, gamma, alpha, q_ref):
    """Price update; the price is projected onto [0, inf)."""
    price = price + gamma * (alpha * (q - q_ref) + arrival_rate - capacity)
    return price if price > 0.0 else 0.0


@njit(cache=True)
def rem_mark(price, phi):
    """Marking probability ``1 - phi**(-price)``."""
    return 1.0 - phi ** (-price)


class REMController(Controller):
    name = "rem"
    kind = REM

    def __init__(self, params: RemParams = RemParams(), capacity: float = 1250.0):
        super().__init__()
        self.rem = params
        self.params = np.array([params.gamma, params.phi, params.alpha, params.q_ref, capacity])
        self.state = np.zeros(1)  # price

    @property
    def price(self) -> float:
        return float(self.state[0])


# --- Adaptive RED ----------------------------------------------------------

@dataclass(frozen=True)
class AredParams:
    min_th: float = 100.0
    max_th: float = 215.0
    w_q: float | None = None  # defaults to 1 - exp(-1/C)
    max_p: float = 0.1
    target: float = 150.0
    band: float = 11.5
    interval: float = 0.5
    increment: float = 0.01
    decrease: float = 0.9
    max_p_low: float = 0.01
    max_p_high: float = 0.5
    gentle: bool = True

    def __post_init__(self):
        if not 0 < self.min_th < self.max_th:
            raise ValueError("ARED thresholds must satisfy 0 < min_th < max_th")
        if self.w_q is not None and not 0 < self.w_q < 1:
            raise ValueError("ARED w_q must lie in (0, 1)")
        if not self.max_p_low <= self.max_p <= self.max_p_high:
            raise ValueError("ARED max_p outside its adaptation range")

    def weight(self, capacity: float) -> float:
        return self.w_q if self.w_q is not None else 1.0 - math.exp(-1.0 / capacity)


@njit(cache=True)
def ared_ramp(avg, min_th, max_th, max_p, gentle):
    """RED drop curve on the averaged queue, with the gentle extension."""
    if avg < min_th:
        return 0.0
    if avg < max_th:
        return max_p * (avg - min_th) / (max_th - min_th)
    if gentle and avg < 2.0 * max_th:
        return max_p + (1.0 - max_p) * (avg - max_th) / max_th
    return 1.0


@njit(cache=True)
def ared_adapt(avg, max_p, target, band, increment, decrease, lo, hi):
    """One AIMD adaptation of ``max_p`` towards the target band."""
    if avg > target + band:
        max_p = max_p + increment
    elif avg < target - band:
        max_p = max_p * decrease
    return min(max(max_p, lo), hi)


class AREDController(Controller):
    name = "ared"
    kind = ARED

    def __init__(self, params: AredParams = AredParams(), capacity: float = 1250.0,
                 buffer: float = 300.0):
        super().__init__()
        if params.max_th > buffer:
            raise ValueError("ARED max_th must not exceed the buffer")
        self.ared = params
        p = params
        self.params = np.array([
            p.min_th, p.max_th, p.weight(capacity), p.target, p.band, p.interval,
            p.increment, p.decrease, p.max_p_low, p.max_p_high, float(p.gentle), capacity,
        ])
        self.state = self.initial_state(0.0)

    def initial_state(self, q0):
        # avg, max_p, time since last adaptation
        return np.array([q0, self.ared.max_p, 0.0])

    @property
    def max_p(self) -> float:
        return float(self.state[1])

    @property
    def avg(self) -> float:
        return float(self.state[0])
