"""Exact differentiation and simultaneous substitution."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

from .core import (
    ONE,
    ZERO,
    Add,
    ArityError,
    Call,
    Const,
    Expr,
    Func,
    Mul,
    Param,
    Pow,
    Var,
    add,
    call,
    lift,
    mul,
    neg,
    pow_,
)


@dataclass(frozen=True)
class Lambda:
    """Replacement for a function symbol: ``body`` written in the formal ``variables``."""

    variables: tuple[str, ...]
    body: Expr

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "body", lift(self.body))


def _call_derivative(fn: str, arg: Expr, node: Call) -> Expr:
    # tan/cot/tanh/coth stay closed under differentiation (no sec/csc)
    if fn == "tan":
        return add(ONE, pow_(node, 2))
    if fn == "cot":
        return add(-1, neg(pow_(node, 2)))
    if fn == "tanh":
        return add(ONE, neg(pow_(node, 2)))
    if fn == "coth":
        return add(ONE, neg(pow_(node, 2)))
    if fn == "sin":
        return call("cos", arg)
    if fn == "cos":
        return neg(call("sin", arg))
    if fn == "exp":
        return node
    if fn == "ln":
        return pow_(arg, -1)
    raise ValueError(fn)


def differentiate(e: Expr, v: str) -> Expr:
    """Partial derivative of ``e`` with respect to the variable named ``v``."""
    memo: dict[int, Expr] = {}

    def d(node: Expr) -> Expr:
        if v not in node.free:
            return ZERO
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = ONE if node.name == v else ZERO
        elif isinstance(node, Add):
            out = add(*(d(t) for t in node.terms))
        elif isinstance(node, Mul):
            pieces = []
            fs = node.factors
            for i, f in enumerate(fs):
                df = d(f)
                if df == ZERO:
                    continue
                pieces.append(mul(*fs[:i], df, *fs[i + 1 :]))
            out = add(*pieces)
        elif isinstance(node, Pow):
            out = mul(Const(node.exp), pow_(node.base, node.exp - 1), d(node.base))
        elif isinstance(node, Call):
            out = mul(_call_derivative(node.fn, node.arg, node), d(node.arg))
        elif isinstance(node, Func):
            pieces = []
            for i, a in enumerate(node.args):
                da = d(a)
                if da == ZERO:
                    continue
                derivs = list(node.derivs)
                derivs[i] += 1
                pieces.append(mul(da, Func(node.name, node.args, tuple(derivs))))
            out = add(*pieces)
        else:  # Const, Param
            out = ZERO
        memo[key] = out
        return out

    return d(e)


def diff(e: Expr, *vs: str) -> Expr:
    """Repeated partial derivative, e.g. ``diff(e, "x", "u")``."""
    for v in vs:
        e = differentiate(e, v)
    return e


def _resolve_function(node: Func, replacement, rebuilt_args: tuple[Expr, ...]) -> Expr:
    if isinstance(replacement, Lambda):
        formals = replacement.variables
        body = replacement.body
    else:
        body = lift(replacement)
        if not all(isinstance(a, Var) for a in node.args):
            raise ArityError(f"{node.name}: plain replacement needs variable arguments; use Lambda")
        formals = tuple(a.name for a in node.args)
    if len(formals) != len(node.args):
        raise ArityError(f"{node.name} takes {len(node.args)} argument(s), replacement has {len(formals)}")
    for formal, count in zip(formals, node.derivs):
        for _ in range(count):
            body = differentiate(body, formal)
    if all(isinstance(a, Var) and a.name == f for a, f in zip(rebuilt_args, formals)):
        return body
    return substitute(body, dict(zip(formals, rebuilt_args)))


def substitute(e: Expr, bindings: Mapping[str, object]) -> Expr:
    """Simultaneous substitution of variables, parameters and function symbols.

    Values are expressions (or numbers) for variables and parameters.  For a
    function symbol the value is a :class:`Lambda`, or an expression in the
    symbol's own argument variables; derivative tags are resolved by
    differentiating the replacement.
    """
    if not bindings:
        return e
    binds = {name: (val if isinstance(val, Lambda) else lift(val)) for name, val in bindings.items()}
    names = frozenset(binds)
    memo: dict[int, Expr] = {}

    def s(node: Expr) -> Expr:
        if not (node.free & names):
            return node
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, (Var, Param)):
            out = binds.get(node.name, node)
            if isinstance(out, Lambda):
                raise ArityError(f"{node.name} is not a function symbol")
        elif isinstance(node, Add):
            out = add(*(s(t) for t in node.terms))
        elif isinstance(node, Mul):
            out = mul(*(s(f) for f in node.factors))
        elif isinstance(node, Pow):
            out = pow_(s(node.base), node.exp)
        elif isinstance(node, Call):
            out = call(node.fn, s(node.arg))
        elif isinstance(node, Func):
            args = tuple(s(a) for a in node.args)
            if node.name in binds:
                out = _resolve_function(node, binds[node.name], args)
            else:
                out = Func(node.name, args, node.derivs)
        else:
            out = node
        memo[key] = out
        return out

    return s(e)


def total_dx(e: Expr) -> Expr:
    """Total x-derivative on the jet space (slots u_x, u_t, u_xx, u_tx)."""
    return add(
        differentiate(e, "x"),
        mul(Var("u_x"), differentiate(e, "u")),
        mul(Var("u_xx"), differentiate(e, "u_x")),
        mul(Var("u_tx"), differentiate(e, "u_t")),
    )


def total_dt(e: Expr) -> Expr:
    """Total t-derivative on the jet space."""
    return add(
        differentiate(e, "t"),
        mul(Var("u_t"), differentiate(e, "u")),
        mul(Var("u_tx"), differentiate(e, "u_x")),
        mul(Var("u_tt"), differentiate(e, "u_t")),
    )
