"""Evaluation scenarios, closed-loop runs and performance metrics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import _kernel
from .controllers import (AredParams, AREDController, Controller, DropTail, PiParams,
                          PIController, RemParams, REMController)
from .fluid import (FluidState, HistoryBuffer, NetworkParams, SimulationError,
                    applied_probability, step)
from .neural import TUNED_IRBF, TUNED_RBF, RbfSpec, make_controller

SAMPLE_PERIOD = 0.01
SETTLING_BAND = 10.0
#: Peak-to-peak queue swing (packets) over the second half of a run above
#: which the run is flagged as oscillating.
OSCILLATION_SWING = 20.0
#: Peak-to-peak applied probability that also counts as sustained oscillation.
OSCILLATION_P_SWING = 0.5

TIMESERIES_HEADER = ("t", "q", "W", "R", "p", "departure_rate")
SUMMARY_HEADER = ("scenario", "controller", "IAE", "utilization", "loss_rate",
                  "overshoot", "settling_time")

CONNECTIONS_GRID = tuple(range(70, 161, 10))
DELAY_GRID_MS = tuple(range(20, 141, 20))


@dataclass(frozen=True)
class Scenario:
    """A named operating condition; access links are folded into ``prop_delay``."""

    name: str
    description: str = ""
    n_profile: tuple = ((0.0, 100),)
    access_delay: float = 0.0
    bottleneck_delay: float = 0.06
    horizon: float = 100.0
    q_target: float = 150.0

    def __post_init__(self):
        times = [t for t, _ in self.n_profile]
        if times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("profile changepoints must start at 0 and increase strictly")
        if times[-1] >= self.horizon:
            raise ValueError("profile changepoints must lie inside the horizon")

    @property
    def prop_delay(self) -> float:
        return 2.0 * self.access_delay + self.bottleneck_delay

    @property
    def changepoints(self) -> tuple:
        return tuple(t for t, _ in self.n_profile[1:])

    def network(self, base: NetworkParams = NetworkParams()) -> NetworkParams:
        return replace(base, prop_delay=self.prop_delay, n_profile=self.n_profile,
                       horizon=self.horizon)


def scenario_catalog() -> list[Scenario]:
    """The four evaluation scenarios (N=100, C=1250 pkt/s, q_t=150, 100 s)."""
    return [
        Scenario("s1", "constant load, 100 connections"),
        Scenario("s2", "dynamic load: 100 -> 130 -> 70 -> 100 connections",
                 n_profile=((0.0, 100), (30.0, 130), (60.0, 70), (80.0, 100))),
        Scenario("s3-short", "short delays: 2 ms access, 10 ms bottleneck",
                 access_delay=0.002, bottleneck_delay=0.010),
        Scenario("s3-long", "long delays: 20 ms access, 140 ms bottleneck",
                 access_delay=0.020, bottleneck_delay=0.140),
    ]


def get_scenario(name: str) -> Scenario:
    for s in scenario_catalog():
        if s.name == name:
            return s
    known = ", ".join(s.name for s in scenario_catalog())
    raise KeyError(f"unknown scenario {name!r} (known: {known})")


# --- metrics ---------------------------------------------------------------

def _time_average(t, y) -> float:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0 or t.size != y.size:
        raise ValueError("series must be non-empty and aligned with its time axis")
    if t.size == 1:
        return float(y[0])
    return float(np.trapezoid(y, t) / (t[-1] - t[0]))


def iae(errors, t) -> float:
    """Time-averaged integral of ``|e|`` over the span of ``t`` (trapezoid rule)."""
    return _time_average(t, np.abs(np.asarray(errors, dtype=float)))


def departure_rate(q, arrival_rate, capacity):
    """Link output rate: full capacity while backlogged, else the arrival rate."""
    q = np.asarray(q, dtype=float)
    return np.where(q > 0.0, capacity, np.minimum(arrival_rate, capacity))


def settling_time(t, errors, band: float = SETTLING_BAND) -> float:
    """First time after which ``|e| < band`` for the rest of the run (inf if never)."""
    outside = np.flatnonzero(np.abs(np.asarray(errors)) >= band)
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last == len(t) - 1:
        return math.inf
    return float(t[last + 1])


@dataclass
class RunSummary:
    iae: float
    utilization: float
    loss_rate: float
    overshoot: float
    settling_time: float
    oscillating: bool

    def line(self) -> str:
        return (f"IAE={self.iae:.4f} utilization={self.utilization:.4f} "
                f"loss_rate={self.loss_rate:.4f} overshoot={self.overshoot:.2f} "
                f"settling_time={self.settling_time:.2f} "
                f"oscillating={'yes' if self.oscillating else 'no'}")


@dataclass
class RunRecord:
    """Sampled series of one closed-loop run plus its summary metrics.

    ``offered`` and ``dropped`` are cumulative packet counts (arrivals and
    marked/dropped packets, overflow included).
    """

    t: np.ndarray
    q: np.ndarray
    W: np.ndarray
    R: np.ndarray
    p: np.ndarray
    departure_rate: np.ndarray
    arrival_rate: np.ndarray
    offered: np.ndarray
    dropped: np.ndarray
    capacity: float
    q_target: float = 150.0
    scenario: str = ""
    controller: str = ""
    summary: RunSummary | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.summary is None:
            self.summary = summarize(self)

    @classmethod
    def from_series(cls, t, q, W, R, p, arrival_rate, capacity, forced_drops=0.0, **kw):
        """Build a record from plain series, integrating arrivals and drops."""
        t, q, W, R, p, a = (np.asarray(x, dtype=float) for x in (t, q, W, R, p, arrival_rate))
        a = np.broadcast_to(a, t.shape).astype(float)
        p = np.broadcast_to(p, t.shape).astype(float)
        offered = _cumtrapz(a, t)
        dropped = _cumtrapz(p * a, t)
        dropped[-1] += forced_drops
        return cls(t, np.broadcast_to(q, t.shape).astype(float), np.broadcast_to(W, t.shape).astype(float),
                   np.broadcast_to(R, t.shape).astype(float), p,
                   departure_rate(np.broadcast_to(q, t.shape), a, capacity), a, offered, dropped,
                   capacity, **kw)

    @property
    def error(self) -> np.ndarray:
        return self.q - self.q_target

    @property
    def horizon(self) -> float:
        return float(self.t[-1] - self.t[0])

    def timeseries_rows(self):
        return zip(self.t, self.q, self.W, self.R, self.p, self.departure_rate)


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def utilization(run: RunRecord) -> float:
    """Time-averaged fraction of link capacity in use."""
    return _time_average(run.t, run.departure_rate / run.capacity)


def loss_rate(run: RunRecord) -> float:
    """Fraction of offered packets that were marked, dropped or overflowed."""
    total = float(run.offered[-1])
    if not total > 0:
        raise ValueError("no packets were offered during the run")
    return float(run.dropped[-1]) / total


def oscillating(run: RunRecord, swing: float = OSCILLATION_SWING,
                p_swing: float = OSCILLATION_P_SWING) -> bool:
    """Sustained oscillation over the second half of the run.

    Either the queue swings by more than ``swing`` packets or the applied
    probability keeps flipping by more than ``p_swing`` (limit cycling at
    the buffer edge).
    """
    half = run.t >= run.t[0] + 0.5 * run.horizon
    q, p = run.q[half], run.p[half]
    if not q.size:
        return False
    return bool(q.max() - q.min() > swing or p.max() - p.min() > p_swing)


def summarize(run: RunRecord) -> RunSummary:
    e = run.error
    try:
        loss = loss_rate(run)
    except ValueError:
        loss = 0.0
    return RunSummary(
        iae=iae(e, run.t),
        utilization=utilization(run),
        loss_rate=loss,
        overshoot=float(max(0.0, e.max())),
        settling_time=settling_time(run.t, e),
        oscillating=oscillating(run),
    )


# --- closed-loop runs ------------------------------------------------------

def simulate(params: NetworkParams, controller: Controller, *, q_target: float | None = None,
             sample_period: float = SAMPLE_PERIOD, scenario: str = "",
             engine: str = "kernel") -> RunRecord:
    """Run ``controller`` against the fluid plant for ``params.horizon`` seconds.

    ``engine="python"`` steps :func:`aqmfluid.fluid.step` one sample at a time
    (slow; used as a cross-check of the compiled loop).
    """
    sample_every = max(1, int(round(sample_period / params.dt)))
    if q_target is None:
        q_target = getattr(controller, "q_target", 150.0)
    if engine == "kernel":
        samples = _run_kernel(params, controller, sample_every)
    elif engine == "python":
        samples = _run_python(params, controller, sample_every)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    cols = dict(zip(_kernel.COLUMNS, samples))
    return RunRecord(
        cols["t"], cols["q"], cols["W"], cols["R"], cols["p"], cols["departure_rate"],
        cols["arrival_rate"], cols["offered"], cols["dropped"], params.capacity,
        q_target=q_target, scenario=scenario, controller=controller.name,
    )


def _run_kernel(params, controller, sample_every):
    kind, par, st, period = controller.kernel_args(params.q0)
    prof_t = np.array([t for t, _ in params.n_profile], dtype=float)
    prof_n = np.array([n for _, n in params.n_profile], dtype=float)
    out, status, k = _kernel.integrate(
        params.capacity, params.prop_delay, params.buffer, params.dt, params.n_steps,
        params.w0, params.q0, params.delayed_drop_probability, params.overflow_drops,
        prof_t, prof_n, kind, par, st, period, sample_every,
    )
    if status:
        raise SimulationError(
            f"non-finite derivative at t={k * params.dt:.6f} s with controller {controller.name!r}"
        )
    return out


def _run_python(params, controller, sample_every):
    controller.reset(params.q0)
    state = FluidState.initial(params)
    history = HistoryBuffer.for_params(params)
    period = controller.control_period
    rows = []
    tick = 0
    offered = dropped = 0.0
    p_ctrl = 0.0
    for k in range(params.n_steps + 1):
        t = k * params.dt
        n = params.connections(t)
        a = n * state.W / state.R
        if not period:
            p_ctrl = controller.update(state.q, a, params.dt)
        else:
            while t >= tick * period - _kernel.TICK_EPS:
                p_ctrl = controller.update(state.q, a, period)
                tick += 1
        p_app = applied_probability(p_ctrl, state.q, params.buffer, params.overflow_drops)
        if k % sample_every == 0:
            dep = params.capacity if state.q > 0 else min(a, params.capacity)
            rows.append((t, state.q, state.W, state.R, p_app, dep, a, offered, dropped, n))
        if k == params.n_steps:
            break
        new = step(state, history, p_ctrl, params, n)
        arrived = a * params.dt
        offered += arrived
        dropped += min(arrived, p_app * arrived + new.forced_drops - state.forced_drops)
        state = new
    return np.array(rows).T


# --- controller registry ---------------------------------------------------

CONTROLLER_NAMES = ("droptail", "pi", "rem", "ared", "rbf", "irbf")


def build_controller(name: str, network: NetworkParams = NetworkParams(), q_target: float = 150.0,
                     *, pi: PiParams | None = None, rem: RemParams | None = None,
                     ared: AredParams | None = None, rbf: RbfSpec | None = None,
                     control_period: float = 1.0 / 160.0, **neural_kw) -> Controller:
    """Construct a named discipline with published defaults unless overridden."""
    if name == "droptail":
        return DropTail(network.buffer)
    if name == "pi":
        return PIController(pi or PiParams(), q_target)
    if name == "rem":
        return REMController(rem or RemParams(), network.capacity)
    if name == "ared":
        ared = ared or AredParams()
        if ared.target != q_target:
            ared = replace(ared, target=q_target)
        return AREDController(ared, network.capacity, network.buffer)
    if name in ("rbf", "irbf"):
        spec = rbf or (TUNED_IRBF if name == "irbf" else TUNED_RBF)
        if name == "rbf" and spec.integral_gain:
            spec = replace(spec, integral_gain=0.0)
        return make_controller(spec, q_target, control_period, network.buffer, name=name,
                               **neural_kw)
    raise KeyError(f"unknown controller {name!r} (known: {', '.join(CONTROLLER_NAMES)})")


def run_scenario(scenario: Scenario | str, controller: str | Controller,
                 base: NetworkParams = NetworkParams(), sample_period: float = SAMPLE_PERIOD,
                 **controller_kw) -> RunRecord:
    if isinstance(scenario, str):
        scenario = get_scenario(scenario)
    params = scenario.network(base)
    if isinstance(controller, str):
        controller = build_controller(controller, params, scenario.q_target, **controller_kw)
    return simulate(params, controller, q_target=scenario.q_target,
                    sample_period=sample_period, scenario=scenario.name)


# --- sweeps ----------------------------------------------------------------

@dataclass
class SweepRow:
    x: float
    controller: str
    utilization: float
    loss_rate: float
    error: str = ""


def sweep(kind: str, controller: str | Callable[[NetworkParams], Controller],
          grid: Iterable[float] | None = None, base: NetworkParams = NetworkParams(),
          scenario: Scenario | None = None, sample_period: float = SAMPLE_PERIOD,
          **controller_kw) -> list[SweepRow]:
    """Utilization and loss across a grid of connection counts or delays (ms).

    A failing grid point is recorded with NaN metrics and the error message;
    the sweep carries on.
    """
    scenario = scenario or get_scenario("s1")
    if kind == "connections":
        grid = CONNECTIONS_GRID if grid is None else grid
    elif kind == "delay":
        grid = DELAY_GRID_MS if grid is None else grid
    else:
        raise ValueError(f"sweep kind must be 'connections' or 'delay', got {kind!r}")
    net = scenario.network(base)
    rows = []
    for x in grid:
        if kind == "connections":
            params = net.with_connections(int(x))
        else:
            params = replace(net, prop_delay=float(x) / 1000.0)
        if callable(controller):
            ctrl = controller(params)
        else:
            ctrl = build_controller(controller, params, scenario.q_target, **controller_kw)
        try:
            run = simulate(params, ctrl, q_target=scenario.q_target, sample_period=sample_period,
                           scenario=scenario.name)
            rows.append(SweepRow(x, ctrl.name, run.summary.utilization, run.summary.loss_rate))
        except (SimulationError, ValueError) as exc:
            rows.append(SweepRow(x, ctrl.name, math.nan, math.nan, str(exc)))
    return rows


# --- CSV export ------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_timeseries(run: RunRecord, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_HEADER)
        for row in run.timeseries_rows():
            w.writerow([_fmt(v) for v in row])
    return path


def summary_row(run: RunRecord) -> list[str]:
    s = run.summary
    return [run.scenario, run.controller] + [
        _fmt(v) for v in (s.iae, s.utilization, s.loss_rate, s.overshoot, s.settling_time)
    ]


def write_summary(runs: Iterable[RunRecord], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for run in runs:
            w.writerow(summary_row(run))
    return path


def write_sweep(rows: Iterable[SweepRow], path) -> Path:
    """Wide table: ``x`` then ``<controller>_utilization``/``<controller>_loss_rate``."""
    rows = list(rows)
    controllers = list(dict.fromkeys(r.controller for r in rows))
    table: dict[float, dict[str, SweepRow]] = {}
    for r in rows:
        table.setdefault(r.x, {})[r.controller] = r
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["x"]
        for c in controllers:
            header += [f"{c}_utilization", f"{c}_loss_rate"]
        w.writerow(header)
        for x in sorted(table):
            line = [_fmt(x)]
            for c in controllers:
                r = table[x].get(c)
                line += [_fmt(r.utilization), _fmt(r.loss_rate)] if r else ["nan", "nan"]
            w.writerow(line)
    return path
