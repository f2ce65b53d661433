"""Integrator tests against closed-form solutions."""

import math

import numpy as np
import pytest

from febvp.ode_core import (
    IntegrationError,
    IntegratorConfig,
    MaxStepsExceeded,
    NonFiniteRhs,
    OutOfSpan,
    SecondOrderOde,
    StatePoint,
    integrate_ivp,
)

FREE_FALL = SecondOrderOde.from_scalar(lambda t, x, v: -9.8, label="ff")
OSC = SecondOrderOde.from_scalar(lambda t, x, v: -x, label="osc")


def ff_exact(t, x0, v0, g=-9.8):
    return x0 + v0 * t + 0.5 * g * t * t


def test_free_fall_exact():
    traj = integrate_ivp(FREE_FALL, StatePoint.of(0.0, [1.0], [2.0]), 3.0,
                         IntegratorConfig())
    for t in (0.0, 0.7, 1.5, 2.25, 3.0):
        st = traj.eval(t)
        assert abs(float(st.x[0]) - ff_exact(t, 1.0, 2.0)) < 1e-12
        assert abs(float(st.v[0]) - (2.0 - 9.8 * t)) < 1e-12


def test_oscillator_half_period():
    # x(0)=1, v(0)=0 -> x(t)=cos t; at pi the state is exactly negated
    traj = integrate_ivp(OSC, StatePoint.of(0.0, [1.0], [0.0]), math.pi,
                         IntegratorConfig())
    end = traj.eval(math.pi)
    assert abs(float(end.x[0]) + 1.0) < 5e-11
    assert abs(float(end.v[0])) < 5e-11


def test_dense_output_between_steps():
    traj = integrate_ivp(OSC, StatePoint.of(0.0, [1.0], [0.0]), 6.0,
                         IntegratorConfig())
    ts = np.linspace(0.05, 5.95, 237)
    worst = max(abs(float(traj.eval(t).x[0]) - math.cos(t)) for t in ts)
    assert worst < 1e-9


def test_backward_integration():
    # start at pi with the state of sin, integrate back to 0
    traj = integrate_ivp(OSC, StatePoint.of(math.pi, [math.sin(math.pi)],
                                            [math.cos(math.pi)]), 0.0,
                         IntegratorConfig())
    for t in (0.0, 0.5, 1.7, 3.0):
        assert abs(float(traj.eval(t).x[0]) - math.sin(t)) < 1e-10


def test_span_endpoints_exact():
    traj = integrate_ivp(FREE_FALL, StatePoint.of(0.25, [0.0], [1.0]), 1.75,
                         IntegratorConfig())
    lo, hi = traj.span
    assert lo == 0.25 and hi == 1.75
    # landing is exact, not merely close
    assert traj.eval(1.75).tau == 1.75


def test_vector_system():
    # planar rotation: both components solve xdd = -x
    ode = SecondOrderOde(dim=2, rhs=lambda t, x, v: -x, label="rot")
    traj = integrate_ivp(ode, StatePoint.of(0.0, [1.0, 0.0], [0.0, 1.0]), 2.0,
                         IntegratorConfig())
    st = traj.eval(1.3)
    assert abs(float(st.x[0]) - math.cos(1.3)) < 1e-10
    assert abs(float(st.x[1]) - math.sin(1.3)) < 1e-10


def test_nonfinite_rhs_raises():
    bad = SecondOrderOde.from_scalar(
        lambda t, x, v: float("nan") if t > 0.5 else 0.0, label="nan-jump")
    with pytest.raises(NonFiniteRhs):
        integrate_ivp(bad, StatePoint.of(0.0, [0.0], [0.0]), 1.0,
                      IntegratorConfig())


def test_max_steps_raises():
    with pytest.raises(MaxStepsExceeded):
        integrate_ivp(OSC, StatePoint.of(0.0, [1.0], [0.0]), 100.0,
                      IntegratorConfig(max_steps=5))


def test_eval_outside_span_raises():
    traj = integrate_ivp(FREE_FALL, StatePoint.of(0.0, [0.0], [0.0]), 1.0,
                         IntegratorConfig())
    with pytest.raises(OutOfSpan):
        traj.eval(1.5)
    with pytest.raises(OutOfSpan):
        traj.eval(-0.1)


def test_integration_error_is_common_base():
    assert issubclass(MaxStepsExceeded, IntegrationError)
    assert issubclass(NonFiniteRhs, IntegrationError)


def test_tolerance_scaling():
    # loosening rel_tol by 4 orders must not break a 1e-6 bound but
    # should take visibly fewer steps
    tight = integrate_ivp(OSC, StatePoint.of(0.0, [1.0], [0.0]), 10.0,
                          IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14))
    loose = integrate_ivp(OSC, StatePoint.of(0.0, [1.0], [0.0]), 10.0,
                          IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10))
    assert abs(float(loose.eval(10.0).x[0]) - math.cos(10.0)) < 1e-6
    assert loose.n_segments < tight.n_segments


def test_zero_width_target():
    traj = integrate_ivp(OSC, StatePoint.of(0.3, [0.5], [0.1]), 0.3,
                         IntegratorConfig())
    st = traj.eval(0.3)
    assert float(st.x[0]) == 0.5 and float(st.v[0]) == 0.1
