import math

import numpy as np
import pytest

from symred.expr import parse
from symred.model import Pde, Tau1
from symred.numcheck import (
    FLOOR,
    characteristic_residual,
    convergence_study,
    pde_residual,
    residual_stats,
)
from symred.ode import OdeProblem, solve_ivp
from symred.reduce import GridSolution, GridSpec


def grid_solution(fn, nt, nx, t_range=(0.0, 0.2), x_range=(1.0, 2.0)):
    g = GridSpec(nt, nx, t_range, x_range)
    tt, xx = np.meshgrid(g.t, g.x, indexing="ij")
    return GridSolution(g.t, g.x, fn(tt, xx))


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_equilibria_have_zero_residual(value):
    sol = grid_solution(lambda t, x: np.full_like(t, value), 7, 9)
    s = residual_stats(sol, Pde(parse("2 + sin(x)")), Tau1(0, 0))
    assert s.linf == 0.0 and s.l2 == 0.0 and s.char_linf == 0.0
    assert s.interior == 5 * 7


def test_constant_is_invariant_under_case4_operator():
    sol = grid_solution(lambda t, x: np.full_like(t, 0.3), 5, 5)
    assert characteristic_residual(sol, Tau1(parse("-1/x"), 0)).linf == 0.0


def test_manufactured_heat_mode():
    # u = exp(-t) sin x solves u_t = u_xx, so the defect is the source term alone
    def defect(n):
        sol = grid_solution(lambda t, x: np.exp(-t) * np.sin(x), n, n)
        tt, xx = np.meshgrid(sol.t[1:-1], sol.x[1:-1], indexing="ij")
        u = np.exp(-tt) * np.sin(xx)
        return pde_residual(sol, Pde(parse("1")), None).linf, float(np.max(u * u * (1 - u)))

    coarse, fine = (abs(a - b) for a, b in (defect(21), defect(41)))
    assert coarse < 1e-3
    assert 3 < coarse / fine < 5


def _case4_exact(c=1.0):
    # invariant solution u = g(x^2/2 + t) with g'' = -c g^2 (1 - g)
    prob = OdeProblem(lambda s, y: np.array([y[1], -c * y[0] ** 2 * (1 - y[0])]), 0.4, [0.3, 0.1], 2.4,
                      rtol=1e-12, atol=1e-14)
    traj, _ = solve_ivp(prob)

    def u(t, x):
        z = x * x / 2 + t
        return np.vectorize(lambda s: float(traj(s)[0]))(z)

    return u


def test_exact_invariant_solution_converges_at_second_order():
    u = _case4_exact()
    pde, op = Pde(parse("x^2")), Tau1(parse("-1/x"), 0)
    levels = [GridSpec(n, n, (0.0, 0.2), (1.0, 2.0)) for n in (21, 41, 81)]
    study = convergence_study(lambda g: grid_solution(u, g.nt, g.nx), levels, pde, op)
    assert study.monotone and not study.floor_reached
    assert 1.8 <= study.order <= 2.2
    assert study.levels == ("21x21", "41x41", "81x81")
    assert all(s.char_linf < 1e-3 for s in study.stats)


def test_noise_fails_refinement():
    rng = np.random.default_rng(0)

    def build(g):
        return grid_solution(lambda t, x: 0.5 + 1e-6 * rng.standard_normal(t.shape), g.nt, g.nx)

    levels = [GridSpec(n, n, (0.0, 0.2), (1.0, 2.0)) for n in (11, 21, 41)]
    study = convergence_study(build, levels, Pde(parse("1")))
    assert not study.monotone and study.order < 0


def test_floor_reached():
    levels = [GridSpec(n, n, (0.0, 1.0), (0.0, 1.0)) for n in (5, 9, 17)]
    study = convergence_study(lambda g: grid_solution(lambda t, x: np.ones_like(t), g.nt, g.nx),
                              levels, Pde(parse("1")))
    assert study.floor_reached and math.isnan(study.order)
    assert study.as_dict()["order"] is None
    assert all(s.linf < FLOOR for s in study.stats)


def test_study_csv_layout():
    u = _case4_exact()
    levels = [GridSpec(n, n, (0.0, 0.2), (1.0, 2.0)) for n in (11, 21, 41)]
    study = convergence_study(lambda g: grid_solution(u, g.nt, g.nx), levels, Pde(parse("x^2")))
    lines = study.to_csv().splitlines()
    assert lines[0] == "level,h_t,h_x,linf,l2,order"
    assert lines[1].endswith(",") and lines[1].startswith("11x11,")
    assert float(lines[3].split(",")[-1]) == pytest.approx(study.local_orders()[2])


def test_needs_three_levels_and_nodes():
    with pytest.raises(ValueError):
        convergence_study(lambda g: None, [1, 2], Pde(parse("1")))
    with pytest.raises(ValueError):
        pde_residual(grid_solution(lambda t, x: t, 2, 5), Pde(parse("1")))
