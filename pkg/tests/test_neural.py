import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aqmfluid.neural import (TUNED_IRBF, TUNED_RBF, IntegralState, NeuralController, RbfSpec,
                             irbf_control, make_controller, neural_step, rbf_basis, rbf_control)

# independent reference: Gaussian activations written out by hand
CENTERS = [-150.0, -75.0, 0.0, 75.0, 150.0]


def ref_basis(e, sigma=40.0):
    return [math.exp(-((e - c) / sigma) ** 2) for c in CENTERS]


def test_basis_at_center_is_one():
    spec = RbfSpec()
    for i, c in enumerate(spec.centers):
        assert rbf_basis(c, spec)[i] == 1.0


def test_basis_one_spread_away():
    spec = RbfSpec(centers=(0.0,), spreads=(40.0,), weights=(1.0,))
    assert abs(rbf_basis(40.0, spec)[0] - math.exp(-1)) < 1e-12


def test_basis_default_geometry_at_zero():
    phi = rbf_basis(0.0, RbfSpec())
    expected = [math.exp(-14.0625), math.exp(-3.515625), 1.0, math.exp(-3.515625), math.exp(-14.0625)]
    np.testing.assert_allclose(phi, expected, rtol=1e-14)
    np.testing.assert_allclose(phi, ref_basis(0.0), rtol=1e-14)


def test_rbf_control_examples():
    assert rbf_control(12.0, RbfSpec()) == 0.0
    assert rbf_control(0.0, RbfSpec(weights=(0, 0, 1, 0, 0))) == 1.0
    w = TUNED_RBF.weights
    expected = sum(wi * phi for wi, phi in zip(w, ref_basis(0.0)))
    assert rbf_control(0.0, TUNED_RBF) == pytest.approx(expected, abs=1e-15)
    assert rbf_control(0.0, TUNED_RBF) == pytest.approx(0.3203, abs=5e-5)


weights = st.lists(st.floats(-1, 1), min_size=5, max_size=5)


@given(weights, weights, st.floats(-3, 3), st.floats(-3, 3), st.floats(-300, 300))
def test_rbf_control_is_linear_in_weights(w1, w2, a, b, e):
    mix = [a * x + b * y for x, y in zip(w1, w2)]
    lhs = rbf_control(e, RbfSpec(weights=mix))
    rhs = a * rbf_control(e, RbfSpec(weights=w1)) + b * rbf_control(e, RbfSpec(weights=w2))
    assert abs(lhs - rhs) < 1e-12


@given(st.floats(-400, 400))
def test_basis_symmetry(e):
    spec = RbfSpec()
    np.testing.assert_array_equal(rbf_basis(e, spec)[::-1], rbf_basis(-e, spec))


def test_irbf_without_integral_gain_matches_rbf():
    spec = RbfSpec(weights=TUNED_IRBF.weights)
    integral = IntegralState()
    for e in np.linspace(-200, 200, 41):
        assert irbf_control(e, spec, integral, 1 / 160) == rbf_control(e, spec)


def test_irbf_zero_error_has_no_integral_term():
    integral = IntegralState()
    for _ in range(100):
        u = irbf_control(0.0, TUNED_IRBF, integral, 1 / 160)
    assert integral.acc == 0.0
    assert u == rbf_control(0.0, TUNED_IRBF)


def test_integral_term_example():
    integral = IntegralState(acc=100.0)
    u = irbf_control(0.0, TUNED_IRBF, integral, 1 / 160)
    assert u - rbf_control(0.0, TUNED_IRBF) == pytest.approx(0.070813, abs=1e-12)


@given(st.lists(st.floats(-200, 200), min_size=1, max_size=50), st.floats(1e-3, 0.1))
def test_rectangle_rule_is_exact_riemann_sum(levels, h):
    integral = IntegralState()
    total = 0.0
    for e in levels:
        integral.accumulate(e, h)
        total += e * h
    assert integral.acc == pytest.approx(total, rel=1e-12, abs=1e-12)


def test_trapezoid_rule_on_linear_error():
    for n in (10, 100):
        h = 1.0 / n
        integral = IntegralState(trapezoid=True)
        integral.accumulate(0.0, h)  # first sample seeds the rule
        for k in range(1, n + 1):
            integral.accumulate(k * h, h)
        # integral of t over [0, 1]; the trapezoid rule is exact for linear signals
        assert integral.acc == pytest.approx(0.5, abs=1e-12)


def test_anti_windup_clamps_integral_contribution():
    spec = TUNED_IRBF
    par = NeuralController(spec).params
    st_ = np.zeros(3)
    for _ in range(100000):
        neural_step(par, st_, 300.0, 1 / 160)
    assert abs(spec.integral_gain * st_[0]) == pytest.approx(2.0)


def test_kernel_step_matches_python_path():
    spec = TUNED_IRBF
    ctrl = NeuralController(spec, 150.0)
    ctrl.reset()
    integral = IntegralState(bound=2.0 / spec.integral_gain)
    for q in np.linspace(0, 300, 97):
        u = ctrl.update(q, 0.0, 1 / 160)
        ref = min(max(irbf_control(q - 150.0, spec, integral, 1 / 160), 0.0), 1.0)
        assert u == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("q, e", [(150, 0.0), (0, -150.0), (300, 150.0)])
def test_controller_error_sign(q, e):
    spec = RbfSpec(weights=(1, 0, 0, 0, 0))
    ctrl = make_controller(spec, 150.0)
    ctrl.reset()
    assert ctrl.update(q, 0.0, 1 / 160) == pytest.approx(min(rbf_control(e, spec), 1.0))
    if e == -150.0:
        assert ctrl.update(q, 0.0, 1 / 160) == 1.0


def test_make_controller_validates_target():
    with pytest.raises(ValueError):
        make_controller(RbfSpec(), 300.0, buffer=300.0)


def test_spec_helpers():
    spec = RbfSpec.evenly_spaced(5)
    assert spec.centers == RbfSpec().centers
    assert spec.with_parameters([0.1] * 5 + [0.002]).integral_gain == 0.002
    with pytest.raises(ValueError):
        spec.with_parameters([0.1] * 3)
    with pytest.raises(ValueError):
        RbfSpec(spreads=(0.0,) * 5)
