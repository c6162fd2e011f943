"""Vectorised numeric evaluation and randomized identity testing."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .calculus import Lambda, substitute
from .core import Add, Call, Const, Expr, ExprError, Func, Mul, Param, Pow, Var, function_symbols, parameters

DEFAULT_BOXES = {"t": (0.1, 1.0), "x": (0.5, 3.0), "u": (-2.0, 2.0)}
FALLBACK_BOX = (-2.0, 2.0)
NONZERO_RANGE = ((-3.0, -0.1), (0.1, 3.0))


class EvaluationError(ExprError):
    pass


class UnboundSymbol(EvaluationError):
    pass


class PoleError(EvaluationError):
    pass


class SamplingStarvation(EvaluationError):
    pass


@dataclass(frozen=True)
class Evaluation:
    value: np.ndarray
    scale: np.ndarray
    bad: np.ndarray


_UFUNCS = {
    "tan": np.tan,
    "tanh": np.tanh,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "cot": lambda a: 1.0 / np.tan(a),
    "coth": lambda a: 1.0 / np.tanh(a),
}


def _near_pole(fn: str, a: np.ndarray, margin: float) -> np.ndarray:
    if fn == "tan":
        return np.abs(np.cos(a)) <= margin
    if fn == "cot":
        return np.abs(np.sin(a)) <= margin
    if fn == "coth":
        return np.abs(a) <= margin
    if fn == "ln":
        return a <= margin
    return np.zeros(np.shape(a), dtype=bool)


def evaluate(e: Expr, env: Mapping[str, object], margin: float = 0.0) -> Evaluation:
    """Evaluate ``e`` on arrays of sample values.

    ``scale`` bounds the magnitude of the additive terms that were combined
    along the way (max over sums, product over products), which is the
    yardstick for relative cancellation.  ``bad`` marks points that sit within
    ``margin`` of a pole, zero denominator or branch cut, or that overflowed.
    """
    memo: dict[int, tuple] = {}
    shape = np.broadcast(*[np.asarray(v) for v in env.values()]).shape if env else ()
    falses = np.zeros(shape, dtype=bool)

    def go(node: Expr):
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            v = float(node.value)
            out = (np.full(shape, v), np.full(shape, abs(v)), falses)
        elif isinstance(node, (Var, Param)):
            if node.name not in env:
                raise UnboundSymbol(f"no value bound for {node.name!r}")
            v = np.broadcast_to(np.asarray(env[node.name], dtype=float), shape)
            out = (v, np.abs(v), falses)
        elif isinstance(node, Func):
            raise UnboundSymbol(f"function symbol {node.name!r} must be substituted before evaluation")
        elif isinstance(node, Add):
            parts = [go(t) for t in node.terms]
            value = parts[0][0].copy()
            scale = parts[0][1].copy()
            bad = parts[0][2]
            for v, s, b in parts[1:]:
                value = value + v
                scale = np.maximum(scale, s)
                bad = bad | b
            out = (value, scale, bad)
        elif isinstance(node, Mul):
            parts = [go(f) for f in node.factors]
            value = parts[0][0]
            scale = parts[0][1]
            bad = parts[0][2]
            for v, s, b in parts[1:]:
                value = value * v
                scale = scale * s
                bad = bad | b
            out = (value, scale, bad)
        elif isinstance(node, Pow):
            bv, bs, bb = go(node.base)
            p = node.exp
            if p.denominator == 1:
                n = int(p)
                if n > 0:
                    out = (bv**n, bs**n, bb)
                else:
                    near = np.abs(bv) <= margin if margin > 0 else bv == 0
                    safe = np.where(near, 1.0, bv)
                    v = safe ** float(n)
                    out = (v, np.abs(v), bb | near)
            else:
                fp = float(p)
                near = bv < 0
                if fp < 0:
                    near = near | (np.abs(bv) <= margin) | (bv == 0)
                safe = np.where(near, 1.0, bv)
                v = safe**fp
                out = (v, np.abs(v), bb | near)
        elif isinstance(node, Call):
            av, _, ab = go(node.arg)
            near = _near_pole(node.fn, av, margin)
            if node.fn in ("cot", "coth"):
                near = near | (av == 0)
            safe = np.where(near, 0.5, av)
            v = _UFUNCS[node.fn](safe)
            out = (v, np.abs(v), ab | near)
        else:
            raise TypeError(type(node).__name__)
        memo[key] = out
        return out

    with np.errstate(all="ignore"):
        value, scale, bad = go(e)
        bad = bad | ~np.isfinite(value) | ~np.isfinite(scale)
    return Evaluation(np.asarray(value), np.asarray(scale), np.asarray(bad))


def _bind_functions(e: Expr, params: Mapping[str, object]) -> tuple[Expr, dict]:
    funcs = {k: v for k, v in params.items() if isinstance(v, (Expr, Lambda))}
    values = {k: v for k, v in params.items() if k not in funcs}
    if funcs:
        e = substitute(e, funcs)
    return e, values


def eval_numeric(e: Expr, point: Mapping[str, float], params: Mapping[str, object] | None = None) -> float:
    """Value of ``e`` at a single point; poles and overflow raise :class:`PoleError`."""
    e, values = _bind_functions(e, params or {})
    env = {**{k: float(v) for k, v in point.items()}, **{k: float(v) for k, v in values.items()}}
    missing = sorted(name for name in e.free if name not in env and name not in function_symbols(e))
    if missing:
        raise UnboundSymbol(f"unbound symbol(s): {', '.join(missing)}")
    res = evaluate(e, env, margin=0.0)
    if bool(res.bad):
        raise PoleError(f"{e} is singular or overflows at {dict(env)}")
    return float(res.value)


def compile_expr(e: Expr, names: Sequence[str], params: Mapping[str, float] | None = None):
    """Numpy callable ``f(*arrays)`` for ``e`` with the given argument order.

    No pole screening; intended for integrators where the caller watches for
    non-finite output.
    """
    e, values = _bind_functions(e, params or {})
    fixed = {k: float(v) for k, v in values.items()}
    leftover = sorted(n for n in e.free if n not in names and n not in fixed)
    if leftover:
        raise UnboundSymbol(f"unbound symbol(s): {', '.join(leftover)}")
    names = tuple(names)

    def f(*args):
        env = dict(fixed)
        env.update(zip(names, args))
        return evaluate(e, env).value

    return f


@dataclass(frozen=True)
class ZeroTestPolicy:
    samples: int = 200
    param_draws: int = 5
    boxes: Mapping[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_BOXES))
    margin: float = 1e-2
    tol: float = 1e-9
    seed: int = 0
    param_ranges: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.samples <= 0 or self.param_draws <= 0:
            raise ValueError("samples and param_draws must be positive")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if not self.margin > 0:
            raise ValueError("margin must be positive")
        for name, (lo, hi) in self.boxes.items():
            if not lo <= hi:
                raise ValueError(f"empty sampling interval for {name}")
        for name, intervals in self.param_ranges.items():
            if not intervals or any(not lo <= hi for lo, hi in intervals):
                raise ValueError(f"empty parameter range for {name}")

    def with_boxes(self, **boxes) -> ZeroTestPolicy:
        merged = dict(self.boxes)
        merged.update({k: tuple(v) for k, v in boxes.items()})
        return replace(self, boxes=merged)

    def with_param_ranges(self, ranges: Mapping[str, tuple]) -> ZeroTestPolicy:
        merged = dict(self.param_ranges)
        merged.update(ranges)
        return replace(self, param_ranges=merged)

    def box(self, name: str) -> tuple[float, float]:
        return tuple(self.boxes.get(name, FALLBACK_BOX))

    def param_range(self, name: str) -> tuple[tuple[float, float], ...]:
        return tuple(self.param_ranges.get(name, NONZERO_RANGE))

    def as_dict(self) -> dict:
        return {
            "samples": self.samples,
            "param_draws": self.param_draws,
            "tol": self.tol,
            "margin": self.margin,
            "seed": self.seed,
            "boxes": {k: list(self.boxes[k]) for k in sorted(self.boxes)},
            "param_ranges": {k: [list(iv) for iv in self.param_ranges[k]] for k in sorted(self.param_ranges)},
        }


@dataclass(frozen=True)
class Witness:
    point: dict
    params: dict
    value: float
    scale: float

    @property
    def relative(self) -> float:
        return abs(self.value) / (1.0 + self.scale)

    def as_dict(self) -> dict:
        return {
            "t": self.point.get("t"),
            "x": self.point.get("x"),
            "u": self.point.get("u"),
            "params": dict(sorted(self.params.items())),
            "value": self.value,
            "scale": self.scale,
            **({"extra": {k: v for k, v in sorted(self.point.items()) if k not in ("t", "x", "u")}}
               if any(k not in ("t", "x", "u") for k in self.point) else {}),
        }


@dataclass(frozen=True)
class ZeroResult:
    """Outcome of :func:`is_zero`; truthy when the expression vanished at every sample."""

    zero: bool
    witness: Witness | None
    points: int
    max_relative: float

    def __bool__(self) -> bool:
        return self.zero


def _draw_interval(rng: np.random.Generator, intervals, n: int) -> np.ndarray:
    intervals = [tuple(map(float, iv)) for iv in intervals]
    widths = np.array([hi - lo for lo, hi in intervals])
    total = widths.sum()
    if total == 0:
        which = rng.integers(0, len(intervals), size=n)
        return np.array([intervals[i][0] for i in which])
    pos = rng.uniform(0.0, total, size=n)
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    idx = np.clip(np.searchsorted(edges, pos, side="right") - 1, 0, len(intervals) - 1)
    lows = np.array([lo for lo, _ in intervals])
    return lows[idx] + (pos - edges[idx])


def is_zero(e: Expr, policy: ZeroTestPolicy | None = None, max_rounds: int = 8) -> ZeroResult:
    """Randomized test that ``e`` vanishes identically on the policy's sampling boxes.

    A point passes when ``|e| <= tol * (1 + scale)``; see :func:`evaluate`
    for the scale.  Points near singularities are redrawn.
    """
    policy = policy or ZeroTestPolicy()
    if isinstance(e, Const):
        value = float(e.value)
        if e.value == 0:
            return ZeroResult(True, None, 0, 0.0)
        return ZeroResult(False, Witness({}, {}, value, abs(value)), 1, abs(value) / (1 + abs(value)))
    funcs = function_symbols(e)
    if funcs:
        raise UnboundSymbol(f"function symbol(s) {sorted(funcs)} must be substituted before is_zero")

    names = sorted(e.free)
    param_names = sorted(parameters(e))
    var_names = [n for n in names if n not in param_names]
    rng = np.random.default_rng(policy.seed)
    max_rel = 0.0
    total = 0
    for _ in range(policy.param_draws):
        pvals = {p: float(_draw_interval(rng, policy.param_range(p), 1)[0]) for p in param_names}
        accepted: dict[str, list] = {n: [] for n in var_names}
        vals: list = []
        scales: list = []
        have = 0
        for _round in range(max_rounds):
            n = 2 * policy.samples
            pts = {v: rng.uniform(*policy.box(v), size=n) for v in var_names}
            res = evaluate(e, {**pts, **pvals}, margin=policy.margin)
            ok = ~np.broadcast_to(res.bad, (n,))
            value = np.broadcast_to(res.value, (n,))[ok]
            scale = np.broadcast_to(res.scale, (n,))[ok]
            for v in var_names:
                accepted[v].extend(pts[v][ok].tolist())
            vals.extend(value.tolist())
            scales.extend(scale.tolist())
            have = len(vals)
            if have >= policy.samples:
                break
        if have == 0:
            raise SamplingStarvation(f"every sample point was rejected near a singularity of {e}")
        have = min(have, policy.samples)
        value = np.array(vals[:have])
        scale = np.array(scales[:have])
        rel = np.abs(value) / (1.0 + scale)
        total += have
        max_rel = max(max_rel, float(rel.max()))
        failing = np.nonzero(rel > policy.tol)[0]
        if failing.size:
            i = int(failing[0])
            point = {v: accepted[v][i] for v in var_names}
            return ZeroResult(False, Witness(point, pvals, float(value[i]), float(scale[i])), total, max_rel)
        if not var_names and not param_names:
            break
    return ZeroResult(True, None, total, max_rel)
