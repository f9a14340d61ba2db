"""Gaussian RBF queue controllers, with and without an error-integral term.

The controller input is the queue tracking error ``e = q - q_target`` in raw
packets. The plain controller emits ``u = w . phi(e)``; the integral variant
adds ``w_i * integral(e)``. Both are saturated to [0, 1] before use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .controllers import NEURAL, Controller
from .fluid import sat

DEFAULT_CENTERS = (-150.0, -75.0, 0.0, 75.0, 150.0)
DEFAULT_SPREAD = 40.0

#: PSO-tuned output weights of the two reference five-neuron controllers.
TUNED_RBF_WEIGHTS = (-1.0, -1.0, 0.340, 0.337, 1.0)
TUNED_IRBF_WEIGHTS = (-1.0, -0.961, 0.345, 0.994, 0.998)
TUNED_IRBF_INTEGRAL_GAIN = 7.0813e-4

WEIGHT_BOUNDS = (-1.0, 1.0)
INTEGRAL_GAIN_BOUNDS = (0.0, 0.01)
#: Anti-windup limit on the integral contribution ``|w_i * acc|``.
WINDUP_LIMIT = 2.0


@dataclass(frozen=True)
class RbfSpec:
    """Hidden-layer geometry plus output weights of an RBF controller."""

    centers: tuple = DEFAULT_CENTERS
    spreads: tuple = (DEFAULT_SPREAD,) * 5
    weights: tuple = (0.0,) * 5
    integral_gain: float = 0.0

    def __post_init__(self):
        for name in ("centers", "spreads", "weights"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = len(self.centers)
        if n == 0 or len(self.spreads) != n or len(self.weights) != n:
            raise ValueError("centers, spreads and weights must have equal, non-zero length")
        if any(not s > 0 for s in self.spreads):
            raise ValueError("all spreads must be positive")
        if not all(map(math.isfinite, self.centers + self.weights)):
            raise ValueError("centers and weights must be finite")
        if not math.isfinite(self.integral_gain):
            raise ValueError("integral_gain must be finite")

    @property
    def n(self) -> int:
        return len(self.centers)

    @classmethod
    def evenly_spaced(cls, n: int, weights=None, integral_gain: float = 0.0,
                      span: float = 150.0, spread: float = DEFAULT_SPREAD) -> "RbfSpec":
        """``n`` centers spread evenly over ``[-span, span]``, equal spreads."""
        if n < 1:
            raise ValueError("need at least one neuron")
        centers = (0.0,) if n == 1 else tuple(np.linspace(-span, span, n))
        if weights is None:
            weights = (0.0,) * n
        return cls(centers, (spread,) * n, tuple(weights), integral_gain)

    def with_parameters(self, vector) -> "RbfSpec":
        """Copy with weights (and, if present, the integral gain) from ``vector``."""
        vector = [float(v) for v in vector]
        if len(vector) == self.n:
            return RbfSpec(self.centers, self.spreads, tuple(vector), self.integral_gain)
        if len(vector) == self.n + 1:
            return RbfSpec(self.centers, self.spreads, tuple(vector[:-1]), vector[-1])
        raise ValueError(f"expected {self.n} or {self.n + 1} parameters, got {len(vector)}")


TUNED_RBF = RbfSpec(weights=TUNED_RBF_WEIGHTS)
TUNED_IRBF = RbfSpec(weights=TUNED_IRBF_WEIGHTS, integral_gain=TUNED_IRBF_INTEGRAL_GAIN)


@njit(cache=True)
def _basis(e, centers, spreads):
    out = np.empty(centers.shape[0])
    for i in range(centers.shape[0]):
        d = e - centers[i]
        out[i] = math.exp(-d * d / (spreads[i] * spreads[i]))
    return out


def rbf_basis(e: float, spec: RbfSpec) -> np.ndarray:
    """Gaussian activations ``exp(-(e - c_i)^2 / sigma_i^2)``."""
    if not math.isfinite(e):
        raise ValueError("error input must be finite")
    return _basis(float(e), np.asarray(spec.centers), np.asarray(spec.spreads))


def rbf_control(e: float, spec: RbfSpec) -> float:
    """Unsaturated RBF output ``w . phi(e)``."""
    return float(np.dot(spec.weights, rbf_basis(e, spec)))


@dataclass
class IntegralState:
    """Running integral of the tracking error with a symmetric clamp."""

    acc: float = 0.0
    bound: float = math.inf
    trapezoid: bool = False
    _last: float | None = field(default=None, repr=False)

    def accumulate(self, e: float, h: float) -> float:
        if self.trapezoid and self._last is not None:
            self.acc += 0.5 * (e + self._last) * h
        else:
            self.acc += e * h
        self._last = e
        self.acc = min(max(self.acc, -self.bound), self.bound)
        return self.acc


def irbf_control(e: float, spec: RbfSpec, integral: IntegralState, h: float) -> float:
    """Unsaturated integral-augmented output; advances ``integral`` by ``h``."""
    acc = integral.accumulate(e, h)
    return rbf_control(e, spec) + spec.integral_gain * acc


@njit(cache=True)
def neural_step(par, st, q, h):
    """Kernel form of one control tick.

    ``par`` = [q_t, w_i, windup, trapezoid, n, centers, spreads, weights];
    ``st`` = [acc, started, previous error].
    """
    q_t = par[0]
    w_i = par[1]
    n = int(par[4])
    e = q - q_t
    if w_i != 0.0:
        if par[3] > 0.5 and st[1] > 0.5:
            st[0] += 0.5 * (e + st[2]) * h
        else:
            st[0] += e * h
        bound = par[2] / abs(w_i)
        if st[0] > bound:
            st[0] = bound
        elif st[0] < -bound:
            st[0] = -bound
    st[1] = 1.0
    st[2] = e
    u = w_i * st[0]
    for i in range(n):
        d = e - par[5 + i]
        s = par[5 + n + i]
        u += par[5 + 2 * n + i] * math.exp(-d * d / (s * s))
    return sat(u)


class NeuralController(Controller):
    """RBF (``integral_gain == 0``) or I-RBF queue controller."""

    kind = NEURAL

    def __init__(self, spec: RbfSpec, q_target: float = 150.0,
                 control_period: float = 1.0 / 160.0, windup: float = WINDUP_LIMIT,
                 trapezoid: bool = False, name: str | None = None):
        super().__init__()
        self.spec = spec
        self.q_target = q_target
        self.control_period = control_period
        self.name = name or ("irbf" if spec.integral_gain else "rbf")
        self.params = np.concatenate([
            [q_target, spec.integral_gain, windup, float(trapezoid), spec.n],
            spec.centers, spec.spreads, spec.weights,
        ])
        self.state = np.zeros(3)

    @property
    def accumulator(self) -> float:
        return float(self.state[0])


def make_controller(spec: RbfSpec, q_target: float = 150.0, control_period: float = 1.0 / 160.0,
                    buffer: float = 300.0, **kwargs) -> NeuralController:
    """Wrap an RBF spec as a queue controller tracking ``q_target``."""
    if not 0 < q_target < buffer:
        raise ValueError("q_target must lie strictly inside (0, buffer)")
    if not control_period > 0:
        raise ValueError("control_period must be positive")
    return NeuralController(spec, q_target, control_period, **kwargs)
