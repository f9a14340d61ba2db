"""Compiled closed-loop integration.

Mirrors ``fluid.step`` driven by ``Controller.update`` but keeps the whole
history in flat arrays on the uniform time grid, so delayed lookups are O(1).
"""
import math

import numpy as np
from numba import njit

from .controllers import (ARED, CONSTANT, DROPTAIL, NEURAL, PI, REM, SCHEDULE,
                          ared_adapt, ared_ramp, droptail_control, pi_control,
                          rem_mark, rem_price)
from .fluid import applied_probability, euler_update, queue_derivative, sat, window_derivative
from .neural import neural_step

# rows of the sample matrix returned by integrate()
COLUMNS = ("t", "q", "W", "R", "p", "departure_rate", "arrival_rate", "offered", "dropped", "N")
TICK_EPS = 1e-9


@njit(cache=True)
def dispatch(kind, par, st, q, arrival_rate, h):
    """Advance the controller state by one tick and return its probability."""
    if kind == CONSTANT:
        return sat(par[0])
    if kind == DROPTAIL:
        return droptail_control(q, par[0])
    if kind == PI:
        e = q - par[2]
        p = pi_control(e, st[0], st[1], par[0], par[1])
        st[0] = e
        st[1] = p
        return p
    if kind == REM:
        st[0] = rem_price(st[0], q, arrival_rate, par[4], par[0], par[2], par[3])
        return rem_mark(st[0], par[1])
    if kind == ARED:
        # per-tick weight equivalent to w_q applied once per arriving packet
        w = 1.0 - (1.0 - par[2]) ** (arrival_rate * h)
        st[0] = (1.0 - w) * st[0] + w * q
        st[2] += h
        if st[2] >= par[5] - TICK_EPS:
            st[2] = 0.0
            st[1] = ared_adapt(st[0], st[1], par[3], par[4], par[6], par[7], par[8], par[9])
        return ared_ramp(st[0], par[0], par[1], st[1], par[10] > 0.5)
    if kind == NEURAL:
        return neural_step(par, st, q, h)
    if kind == SCHEDULE:
        i = int(st[0])
        if i >= par.shape[0]:
            i = par.shape[0] - 1
        st[0] += 1.0
        return sat(par[i])
    return math.nan


@njit(cache=True)
def _interp(hist, k, tau, dt, before):
    if tau < 0.0:
        return before
    x = tau / dt
    i = int(math.floor(x))
    if i >= k:
        return hist[k]
    frac = x - i
    return hist[i] + frac * (hist[i + 1] - hist[i])


@njit(cache=True)
def integrate(capacity, prop_delay, buffer, dt, n_steps, w0, q0, delayed, overflow_drops,
              prof_t, prof_n, kind, par, st, period, sample_every):
    """Run one closed loop; returns ``(samples, status, failed_step)``.

    ``status`` is 0 on success and 1 if a derivative became non-finite, in
    which case samples after ``failed_step`` are NaN.
    """
    n_samples = n_steps // sample_every + 1
    out = np.full((len(COLUMNS), n_samples), np.nan)
    Wh = np.empty(n_steps + 1)
    Rh = np.empty(n_steps + 1)
    Ph = np.empty(n_steps + 1)
    W = w0
    q = q0
    R = q / capacity + prop_delay
    R0 = R
    p_ctrl = 0.0
    tick = 0
    prof_i = 0
    offered = 0.0
    dropped = 0.0
    for k in range(n_steps + 1):
        t = k * dt
        while prof_i + 1 < prof_t.shape[0] and t >= prof_t[prof_i + 1] - TICK_EPS:
            prof_i += 1
        n = prof_n[prof_i]
        a = n * W / R
        if period <= 0.0:
            p_ctrl = dispatch(kind, par, st, q, a, dt)
        else:
            while t >= tick * period - TICK_EPS:
                p_ctrl = dispatch(kind, par, st, q, a, period)
                tick += 1
        p_app = applied_probability(p_ctrl, q, buffer, overflow_drops)
        Wh[k] = W
        Rh[k] = R
        Ph[k] = p_app
        if k % sample_every == 0:
            j = k // sample_every
            out[0, j] = t
            out[1, j] = q
            out[2, j] = W
            out[3, j] = R
            out[4, j] = p_app
            out[5, j] = capacity if q > 0.0 else min(a, capacity)
            out[6, j] = a
            out[7, j] = offered
            out[8, j] = dropped
            out[9, j] = n
        if k == n_steps:
            break
        tau = t - R
        W_d = _interp(Wh, k, tau, dt, w0)
        R_d = _interp(Rh, k, tau, dt, R0)
        p_w = _interp(Ph, k, tau, dt, Ph[0]) if delayed else p_app
        dW = window_derivative(W, R, W_d, R_d, p_w)
        dq = queue_derivative(q, W, R, n, capacity)
        if not (math.isfinite(dW) and math.isfinite(dq)):
            return out, 1, k
        W, q, overflow = euler_update(W, q, dW, dq, dt, buffer)
        arrived = a * dt
        offered += arrived
        dropped += min(arrived, p_app * arrived + overflow)
        R = q / capacity + prop_delay
    return out, 0, n_steps
