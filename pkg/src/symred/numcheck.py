"""Finite-difference certification of grid solutions."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .expr import compile_expr
from .model import Pde, ReductionOperator
from .reduce import GridSolution

FLOOR = 1e-12


@dataclass(frozen=True)
class ResidualStats:
    linf: float
    l2: float
    h_t: float
    h_x: float
    interior: int
    char_linf: float | None = None

    def as_dict(self) -> dict:
        return {
            "linf": self.linf,
            "l2": self.l2,
            "char_linf": self.char_linf,
            "h_t": self.h_t,
            "h_x": self.h_x,
            "interior": self.interior,
        }


def _steps(sol: GridSolution) -> tuple[float, float]:
    if len(sol.t) < 3 or len(sol.x) < 3:
        raise ValueError("need at least 3 nodes per axis")
    return float(sol.t[-1] - sol.t[0]) / (len(sol.t) - 1), float(sol.x[-1] - sol.x[0]) / (len(sol.x) - 1)


def _differences(sol: GridSolution):
    ht, hx = _steps(sol)
    u = sol.u
    ut = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * ht)
    ux = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * hx)
    uxx = (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2]) / (hx * hx)
    tt, xx = np.meshgrid(sol.t[1:-1], sol.x[1:-1], indexing="ij")
    return ht, hx, tt, xx, u[1:-1, 1:-1], ut, ux, uxx


def _stats(r: np.ndarray, ht: float, hx: float) -> ResidualStats:
    linf = float(np.max(np.abs(r)))
    l2 = math.sqrt(ht * hx * float(np.sum(r * r)))
    return ResidualStats(linf, l2, ht, hx, int(r.size))


def pde_residual(sol: GridSolution, pde: Pde, params=None) -> ResidualStats:
    """Central-difference defect D_t u - D_xx u - k u^2 (1 - u) on interior nodes."""
    ht, hx, _, xx, u, ut, _, uxx = _differences(sol)
    k = np.broadcast_to(compile_expr(pde.k, ("x",), params)(xx), u.shape)
    return _stats(ut - uxx - k * u * u * (1 - u), ht, hx)


def characteristic_residual(sol: GridSolution, op: ReductionOperator, params=None) -> ResidualStats:
    """Discrete Q[u]: eta - D_t u - xi D_x u (tau = 1) or eta - D_x u (tau = 0)."""
    ht, hx, tt, xx, u, ut, ux, _ = _differences(sol)
    names = ("t", "x", "u")
    eta = np.broadcast_to(compile_expr(op.eta, names, params)(tt, xx, u), u.shape)
    if op.tau == 1:
        xi = np.broadcast_to(compile_expr(op.xi, names, params)(tt, xx, u), u.shape)
        r = eta - ut - xi * ux
    else:
        r = eta - ux
    return _stats(r, ht, hx)


def residual_stats(sol: GridSolution, pde: Pde, op: ReductionOperator, params=None) -> ResidualStats:
    s = pde_residual(sol, pde, params)
    c = characteristic_residual(sol, op, params)
    return ResidualStats(s.linf, s.l2, s.h_t, s.h_x, s.interior, c.linf)


@dataclass(frozen=True)
class ConvergenceStudy:
    levels: tuple  # grid sizes per level, as labels
    stats: tuple  # ResidualStats per level
    order: float  # least-squares slope of log linf against log h_x
    monotone: bool
    floor_reached: bool

    def local_orders(self) -> list:
        out = [None]
        for a, b in zip(self.stats, self.stats[1:]):
            if a.linf > 0 and b.linf > 0:
                out.append(math.log(a.linf / b.linf) / math.log(a.h_x / b.h_x))
            else:
                out.append(None)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("level,h_t,h_x,linf,l2,order\n")
        for label, s, p in zip(self.levels, self.stats, self.local_orders()):
            order = "" if p is None else f"{p:.17g}"
            buf.write(f"{label},{s.h_t:.17g},{s.h_x:.17g},{s.linf:.17g},{s.l2:.17g},{order}\n")
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "stats": [s.as_dict() for s in self.stats],
            "order": None if math.isnan(self.order) else self.order,
            "monotone": self.monotone,
            "floor_reached": self.floor_reached,
        }


def convergence_study(builder, levels, pde: Pde, op: ReductionOperator | None = None, params=None) -> ConvergenceStudy:
    """Residuals on each level of a geometric refinement and the fitted order.

    ``builder`` maps a level (any grid description) to a GridSolution.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ValueError("a convergence study needs at least three levels")
    stats = []
    for level in levels:
        sol = builder(level)
        stats.append(residual_stats(sol, pde, op, params) if op is not None else pde_residual(sol, pde, params))
    linf = np.array([s.linf for s in stats])
    hx = np.array([s.h_x for s in stats])
    floor = bool(np.all(linf < FLOOR))
    monotone = bool(np.all(np.diff(linf) < 0))
    order = float("nan") if floor or np.any(linf <= 0) else float(np.polyfit(np.log(hx), np.log(linf), 1)[0])
    labels = tuple(f"{level.nt}x{level.nx}" if hasattr(level, "nx") else str(level) for level in levels)
    return ConvergenceStudy(labels, tuple(stats), order, monotone, floor)
