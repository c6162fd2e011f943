"""Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.

The state may be any numpy array shape, so a whole family of independent
trajectories (characteristics, time slices) advances in one call.  The error
norm is the max over all components, which keeps every member within
tolerance rather than just the average.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

BLOWUP = 1e8

# Dormand-Prince tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class OdeError(RuntimeError):
    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.12g}")
        self.t = t


class StepUnderflow(OdeError):
    pass


class BlowUp(OdeError):
    pass


@dataclass(frozen=True)
class OdeProblem:
    """y' = rhs(t, y) from (t0, y0) to t_end; t_end < t0 integrates backwards."""

    rhs: Callable
    t0: float
    y0: np.ndarray
    t_end: float
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.t_end == self.t0:
            raise ValueError("integration span is degenerate")
        object.__setattr__(self, "y0", np.array(self.y0, dtype=float))


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray  # accepted step nodes, in integration order
    y: np.ndarray  # states at the nodes, shape (len(t),) + state shape
    dy: np.ndarray  # derivatives at the nodes

    def __call__(self, s) -> np.ndarray:
        """Cubic Hermite interpolant between accepted steps."""
        s = float(s)
        t = self.t
        forward = t[-1] >= t[0]
        ts = t if forward else t[::-1]
        i = int(np.clip(np.searchsorted(ts, s) - 1, 0, len(t) - 2))
        if not forward:
            i = len(t) - 2 - i
        t0, t1 = t[i], t[i + 1]
        h = t1 - t0
        th = (s - t0) / h
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th**2 * (3 - 2 * th)
        h11 = th**2 * (th - 1)
        return h00 * self.y[i] + h10 * h * self.dy[i] + h01 * self.y[i + 1] + h11 * h * self.dy[i + 1]


def _initial_step(f0, y0, span, problem) -> float:
    scale = problem.atol + problem.rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    return min(h, abs(span) * 0.1, 1e-2 * max(1.0, abs(span)))


def solve_ivp(
    problem: OdeProblem, t_eval=None, max_step: float = np.inf, max_steps: int = 1_000_000
) -> tuple[Trajectory, np.ndarray | None]:
    """Integrate ``problem``; returns the trajectory and the states at ``t_eval``.

    Steps are shortened to land exactly on each requested time, so the values
    at ``t_eval`` are step endpoints, not interpolants.
    """
    f = problem.rhs
    t, y = float(problem.t0), problem.y0.copy()
    t_end = float(problem.t_end)
    direction = 1.0 if t_end > t else -1.0
    span = t_end - t
    targets = []
    if t_eval is not None:
        targets = sorted({float(s) for s in np.atleast_1d(t_eval)}, key=lambda s: direction * s)
        if any(direction * (s - t) < 0 or direction * (s - t_end) > 0 for s in targets):
            raise ValueError("t_eval outside the integration span")
    out = {}
    k1 = np.asarray(f(t, y), dtype=float)
    h = _initial_step(k1, y, span, problem)
    ts, ys, dys = [t], [y.copy()], [k1.copy()]
    ti = 0

    def tiny(t):
        return 1e-14 * max(1.0, abs(t))

    def collect(t, y, ti):
        # targets closer than the smallest admissible step count as reached
        while ti < len(targets) and abs(targets[ti] - t) <= tiny(t):
            out[targets[ti]] = y.copy()
            ti += 1
        return ti

    ti = collect(t, y, ti)
    attempts = 0
    while direction * (t_end - t) > tiny(t):
        attempts += 1
        if attempts > max_steps:
            raise OdeError(f"step budget of {max_steps} exhausted", t)
        stop = targets[ti] if ti < len(targets) else t_end
        h = min(h, max_step, abs(stop - t))
        if h < tiny(t):
            raise StepUnderflow("step size underflow", t)
        hs = direction * h
        k = [k1]
        for s in range(1, 7):
            ys_ = y + hs * sum(a * k[j] for j, a in enumerate(_A[s]) if a)
            k.append(np.asarray(f(t + _C[s] * hs, ys_), dtype=float))
        y_new = y + hs * sum(b * k[j] for j, b in enumerate(_B5) if b)
        err = hs * sum(e * k[j] for j, e in enumerate(_E) if e)
        with np.errstate(all="ignore"):
            scale = problem.atol + problem.rtol * np.maximum(np.abs(y), np.abs(y_new))
            norm = float(np.max(np.abs(err) / scale)) if np.size(err) else 0.0
        if not np.isfinite(norm) or not np.all(np.isfinite(y_new)):
            h *= 0.25
            continue
        if norm <= 1.0:
            t_new = stop if h == abs(stop - t) else t + hs
            t, y, k1 = t_new, y_new, k[6]
            ts.append(t)
            ys.append(y.copy())
            dys.append(k1.copy())
            if np.max(np.abs(y)) > BLOWUP:
                raise BlowUp("solution exceeds 1e8", t)
            ti = collect(t, y, ti)
            h *= min(5.0, max(0.2, 0.9 * norm ** -0.2)) if norm > 0 else 5.0
        else:
            h *= max(0.2, 0.9 * norm ** -0.2)
    traj = Trajectory(np.array(ts), np.array(ys), np.array(dys))
    if t_eval is None:
        return traj, None
    return traj, np.array([out[float(s)] for s in np.atleast_1d(t_eval)])
