"""Numerical invariant solutions.

tau = 1: the invariant surface condition and the equation together force an
ODE for the profile f(x) = u(0, x); characteristics dx/dt = xi, du/dt = eta
then carry that profile forward in time.

tau = 0: u_x = eta fixes u along x once a value is known at one point, and
the equation restricted to that point gives the anchor ODE in t.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .detsys import _d
from .expr import U_X, Expr, add, compile_expr, lift, mul, neg, substitute
from .model import Pde, Tau0, Tau1
from .ode import OdeError, OdeProblem, solve_ivp

OVERSAMPLE = 4
RTOL, ATOL = 1e-10, 1e-12


class ReductionError(RuntimeError):
    pass


class CharacteristicCrossing(ReductionError):
    def __init__(self, t: float):
        super().__init__(f"characteristics cross at t = {t:.12g}")
        self.t = t


class CorridorExit(ReductionError):
    pass


@dataclass(frozen=True)
class GridSpec:
    nt: int
    nx: int
    t_range: tuple[float, float]
    x_range: tuple[float, float]

    def __post_init__(self):
        if self.nt < 2 or self.nx < 2:
            raise ValueError("grid needs at least two nodes per axis")
        if not (self.t_range[1] > self.t_range[0] and self.x_range[1] > self.x_range[0]):
            raise ValueError("grid ranges must be increasing")

    @property
    def t(self) -> np.ndarray:
        return np.linspace(*self.t_range, self.nt)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.x_range, self.nx)

    def as_dict(self) -> dict:
        return {"nt": self.nt, "nx": self.nx, "t_range": list(self.t_range), "x_range": list(self.x_range)}


@dataclass
class GridSolution:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray  # shape (len(t), len(x))
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.u.shape != (len(self.t), len(self.x)):
            raise ValueError("u must have shape (N_t, N_x)")
        if not np.all(np.isfinite(self.u)):
            raise ReductionError("grid solution contains non-finite values")
        if np.any(np.diff(self.t) <= 0) or np.any(np.diff(self.x) <= 0):
            raise ValueError("grid must be strictly increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,x,u\n")
        for i, ti in enumerate(self.t):
            for j, xj in enumerate(self.x):
                buf.write(f"{ti:.17g},{xj:.17g},{self.u[i, j]:.17g}\n")
        return buf.getvalue()


def reduced_ode_rhs(pde: Pde, op: Tau1, t0: float = 0) -> Expr:
    """f'' on the line t = t0, written with ``u`` for f and ``u_x`` for f'."""
    at0 = {"t": lift(Fraction(t0))}
    try:
        return add(
            substitute(op.eta, at0),
            neg(mul(substitute(op.xi, at0), U_X)),
            neg(substitute(pde.rhs(), at0)),
        )
    except ZeroDivisionError:
        raise ReductionError(f"operator is singular on the initial line t = {t0}") from None


def reduced_initial_ode_tau1(pde: Pde, op: Tau1, x0: float, f0: float, df0: float, x_end: float,
                             params=None, rtol: float = RTOL, atol: float = ATOL, t0: float = 0) -> OdeProblem:
    """First-order system (f, f') from x0 towards x_end."""
    g = compile_expr(reduced_ode_rhs(pde, op, t0), ("x", "u", "u_x"), params)

    def rhs(s, y):
        return np.array([y[1], g(s, y[0], y[1])])

    return OdeProblem(rhs, x0, [f0, df0], x_end, rtol, atol)


def initial_profile(pde: Pde, op: Tau1, x0: float, f0: float, df0: float, xs: np.ndarray,
                    params=None, rtol: float = RTOL, atol: float = ATOL, t0: float = 0) -> tuple[np.ndarray, np.ndarray]:
    """f and f' at ``xs`` (sorted), shooting both ways from x0."""
    xs = np.asarray(xs, dtype=float)
    f = np.empty_like(xs)
    df = np.empty_like(xs)
    left, right = xs <= x0, xs > x0
    for mask, end in ((left, xs[0]), (right, xs[-1])):
        if not mask.any():
            continue
        if end == x0:
            f[mask], df[mask] = f0, df0
            continue
        problem = reduced_initial_ode_tau1(pde, op, x0, f0, df0, end, params, rtol, atol, t0)
        try:
            _, vals = solve_ivp(problem, t_eval=xs[mask])
        except OdeError as exc:
            raise ReductionError(f"initial profile failed: {exc} (x plays the role of t)") from exc
        f[mask], df[mask] = vals[:, 0], vals[:, 1]
    return f, df


def constant_profile(f0: float, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Profile that ignores the reduced ODE; a negative control."""
    return np.full(len(xs), float(f0)), np.zeros(len(xs))


def _launch_interval(op: Tau1, grid: GridSpec, f0: float, params) -> tuple[float, float]:
    """Launch abscissas reaching the x-range: extend upstream by 1.5 T max speed."""
    lo, hi = grid.x_range
    xi = compile_expr(op.xi, ("t", "x", "u"), params)
    probe = np.linspace(lo, hi, 64)
    speed = np.broadcast_to(xi(grid.t_range[0], probe, np.full_like(probe, f0)), probe.shape)
    span = 1.5 * (grid.t_range[1] - grid.t_range[0])
    pad = 0.05 * (hi - lo)
    left = span * max(float(np.max(speed)), 0.0)
    right = span * max(float(-np.min(speed)), 0.0)
    return lo - left - pad, hi + right + pad


def characteristics_solution_tau1(pde: Pde, op: Tau1, grid: GridSpec, *, x0: float, f0: float, df0: float,
                                  params=None, use_ode: bool = True, oversample: int = OVERSAMPLE,
                                  rtol: float = RTOL, atol: float = ATOL, meta=None) -> GridSolution:
    """Invariant solution for a tau = 1 operator, built from forward characteristics."""
    a, b = _launch_interval(op, grid, f0, params)
    n = max(oversample * grid.nx, 8)
    s = np.linspace(a, b, n)
    if use_ode:
        f, df = initial_profile(pde, op, x0, f0, df0, s, params, rtol, atol, grid.t_range[0])
    else:
        f, df = constant_profile(f0, s)

    names = ("t", "x", "u")
    xi, eta = op.xi, op.eta
    fx = [compile_expr(e, names, params) for e in (xi, _d(xi, "x"), _d(xi, "u"))]
    fe = [compile_expr(e, names, params) for e in (eta, _d(eta, "x"), _d(eta, "u"))]

    # state rows: position X, value U, and their sensitivities to the launch point
    def rhs(t, y):
        X, Uv, Xs, Us = y
        xv, xx, xu = (g(t, X, Uv) for g in fx)
        ev, ex, eu = (g(t, X, Uv) for g in fe)
        shape = X.shape
        return np.array([
            np.broadcast_to(xv, shape),
            np.broadcast_to(ev, shape),
            xx * Xs + xu * Us,
            ex * Xs + eu * Us,
        ])

    y0 = np.array([s, f, np.ones(n), df])
    times = grid.t
    _, states = solve_ivp(OdeProblem(rhs, times[0], y0, times[-1], rtol, atol), t_eval=times)

    xg = grid.x
    u = np.empty((grid.nt, grid.nx))
    for i, ti in enumerate(times):
        X, Uv, Xs, Us = states[i]
        if np.any(Xs <= 0) or np.any(np.diff(X) <= 0):
            raise CharacteristicCrossing(float(ti))
        if X[0] > xg[0] or X[-1] < xg[-1]:
            raise CorridorExit(f"characteristics no longer cover the x-range at t = {ti:.12g}")
        u[i] = CubicHermiteSpline(X, Uv, Us / Xs)(xg)
    info = {"route": "characteristics", "launch_interval": [a, b], "launch_points": n,
            "use_ode": use_ode, "x0": x0, "f0": f0, "df0": df0}
    info.update(meta or {})
    return GridSolution(times, xg, u, info)


def anchor_rhs(pde: Pde, op: Tau0) -> Expr:
    """eta*eta_u + eta_x + k u^2 (1 - u): u_t along any line x = const."""
    eta = op.eta
    return add(mul(eta, _d(eta, "u")), _d(eta, "x"), pde.rhs())


def tau0_solution(pde: Pde, op: Tau0, grid: GridSpec, *, x0: float, v0: float, params=None,
                  rtol: float = RTOL, atol: float = ATOL, meta=None) -> GridSolution:
    """Invariant solution for a tau = 0 operator: anchor ODE in t, then u_x = eta across x."""
    lo, hi = grid.x_range
    if not lo <= x0 <= hi:
        raise ValueError("anchor must lie inside the x-range")
    times = grid.t
    g = compile_expr(substitute(anchor_rhs(pde, op), {"x": x0}), ("t", "u"), params)
    _, v = solve_ivp(OdeProblem(lambda t, y: g(t, y), times[0], [v0], times[-1], rtol, atol), t_eval=times)
    v = v[:, 0]

    e = compile_expr(op.eta, ("t", "x", "u"), params)
    xg = grid.x
    u = np.empty((grid.nt, grid.nx))
    left, right = xg <= x0, xg > x0
    for mask, end in ((left, lo), (right, hi)):
        if not mask.any():
            continue
        if end == x0:
            u[:, mask] = v[:, None]
            continue
        problem = OdeProblem(lambda s, y: e(times, s, y), x0, v, end, rtol, atol)
        try:
            _, vals = solve_ivp(problem, t_eval=xg[mask])
        except OdeError as exc:
            raise ReductionError(f"spatial integration failed: {exc} (x plays the role of t)") from exc
        u[:, mask] = vals.T
    info = {"route": "tau0", "x0": x0, "v0": v0}
    info.update(meta or {})
    return GridSolution(times, xg, u, info)


@dataclass(frozen=True)
class PipelineDefaults:
    params: dict
    t_range: tuple[float, float]
    x_range: tuple[float, float]
    anchor: float
    f0: float = 0.3
    df0: float = 0.0
    v0: float = 0.5


PIPELINES = {
    "thm2.case4": PipelineDefaults({"c": 1.0}, (0.0, 0.2), (1.0, 2.0), 1.0),
    "thm2.case5+": PipelineDefaults({"c": 2.0}, (0.0, 0.2), (0.0, 1.0), 0.0),
    "thm2.case5-": PipelineDefaults({"c": 2.0}, (0.0, 0.2), (0.0, 1.0), 0.0),
    "tau0.item5": PipelineDefaults({}, (0.0, 0.3), (0.5, 2.0), 1.0),
    "tau0.item6": PipelineDefaults({}, (0.0, 0.3), (0.5, 2.0), 1.0),
}


def pipeline_defaults(entry) -> PipelineDefaults:
    hit = PIPELINES.get(entry.id)
    if hit is not None:
        return hit
    x_range = tuple(entry.domain["x"])
    params = {name: float(ranges[-1][1]) for name, ranges in entry.params.items()}
    return PipelineDefaults(params, (0.0, 0.2), x_range, x_range[0])


def build_solution(entry, grid: GridSpec, *, params=None, anchor=None, f0=None, df0=None, v0=None,
                   use_ode: bool = True, oversample: int = OVERSAMPLE) -> GridSolution:
    """Run the pipeline matching the entry's operator type."""
    d = pipeline_defaults(entry)
    params = dict(d.params if params is None else params)
    anchor = d.anchor if anchor is None else anchor
    pde, op = entry.instantiate()
    meta = {"id": entry.id, "params": dict(sorted(params.items()))}
    if isinstance(op, Tau1):
        return characteristics_solution_tau1(
            pde, op, grid, x0=anchor, f0=d.f0 if f0 is None else f0, df0=d.df0 if df0 is None else df0,
            params=params, use_ode=use_ode, oversample=oversample, meta=meta)
    return tau0_solution(pde, op, grid, x0=anchor, v0=d.v0 if v0 is None else v0, params=params, meta=meta)


__all__ = [
    "CharacteristicCrossing",
    "CorridorExit",
    "GridSolution",
    "GridSpec",
    "PIPELINES",
    "PipelineDefaults",
    "ReductionError",
    "anchor_rhs",
    "build_solution",
    "characteristics_solution_tau1",
    "constant_profile",
    "initial_profile",
    "pipeline_defaults",
    "reduced_initial_ode_tau1",
    "reduced_ode_rhs",
    "tau0_solution",
]
