import math

import numpy as np
import pytest

from symred.ode import BlowUp, OdeError, OdeProblem, StepUnderflow, solve_ivp


def test_straight_line():
    _, vals = solve_ivp(OdeProblem(lambda t, y: np.array([y[1], 0.0]), 1.0, [0.0, 1.0], 2.0), t_eval=[2.0])
    assert abs(vals[0, 0] - 1.0) <= 1e-9


def test_logistic_against_implicit_solution():
    times = np.linspace(0, 5, 11)
    _, vals = solve_ivp(OdeProblem(lambda t, y: y * y * (1 - y), 0.0, [0.5], 5.0), t_eval=times)
    v = vals[:, 0]
    assert np.all(np.diff(v) > 0) and 0.98 < v[-1] < 1.0
    # separable: ln(v/(1-v)) - 1/v = t + const
    g = np.log(v / (1 - v)) - 1 / v
    assert np.max(np.abs(g - g[0] - times)) < 1e-7


def test_blow_up_near_pole():
    with pytest.raises(BlowUp) as info:
        solve_ivp(OdeProblem(lambda t, y: y * y, 0.0, [1.0], 2.0))
    assert abs(info.value.t - 1.0) < 1e-6


def test_backward_integration_and_dense_output():
    traj, vals = solve_ivp(OdeProblem(lambda t, y: -y, 1.0, [1.0], 0.0), t_eval=[0.5, 0.0])
    assert np.allclose(vals[:, 0], [math.exp(0.5), math.e], rtol=1e-9)
    assert math.isclose(float(traj(0.25)[0]), math.exp(0.75), rel_tol=1e-8)


def test_step_underflow():
    # the right-hand side is undefined past t = 1
    def rhs(t, y):
        with np.errstate(invalid="ignore"):
            return np.array([np.sqrt(1.0 - t)])

    with pytest.raises(StepUnderflow) as info:
        solve_ivp(OdeProblem(rhs, 0.0, [0.0], 2.0))
    assert abs(info.value.t - 1.0) < 1e-6


def test_step_budget():
    rhs = lambda t, y: np.array([np.sin(1 / (1 - t)) / (1 - t) ** 2])  # noqa: E731
    with pytest.raises(OdeError, match="budget"):
        solve_ivp(OdeProblem(rhs, 0.0, [0.0], 2.0), max_steps=2000)


def test_batched_states_land_on_t_eval():
    y0 = np.array([[1.0, 2.0], [3.0, 4.0]])
    _, vals = solve_ivp(OdeProblem(lambda t, y: -y, 0.0, y0, 1.0), t_eval=[0.0, 1.0])
    assert vals.shape == (2, 2, 2)
    assert np.allclose(vals[1], y0 * math.exp(-1), rtol=1e-9)


def test_problem_validation():
    with pytest.raises(ValueError):
        OdeProblem(lambda t, y: y, 0.0, [1.0], 0.0)
    with pytest.raises(ValueError):
        OdeProblem(lambda t, y: y, 0.0, [1.0], 1.0, rtol=0)
