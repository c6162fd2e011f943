"""Text rendering in the input grammar, so that ``parse(to_text(e)) == e``."""

from __future__ import annotations

from fractions import Fraction

from .core import Add, Call, Const, Expr, Func, Mul, Param, Pow, Var


def _fraction_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _exponent_text(e: Fraction) -> str:
    if e.denominator == 1 and e > 0:
        return str(e.numerator)
    return f"({_fraction_text(e)})"


def _func_text(node: Func) -> str:
    args = ", ".join(to_text(a) for a in node.args)
    if node.order == 0:
        return f"{node.name}({args})"
    if len(node.args) == 1:
        return f"{node.name}{chr(39) * node.derivs[0]}({args})"
    names = []
    for arg, count in zip(node.args, node.derivs):
        label = arg.name if isinstance(arg, Var) else "?"
        names.extend([label] * count)
    return f"{node.name}[{','.join(names)}]({args})"


def _factor_text(node: Expr) -> str:
    """Render a node appearing as a factor of a product."""
    if isinstance(node, Add):
        return f"({to_text(node)})"
    if isinstance(node, Const) and (node.value < 0 or node.value.denominator != 1):
        return f"({_fraction_text(node.value)})"
    return to_text(node)


def _base_text(node: Expr) -> str:
    if isinstance(node, (Add, Mul, Pow)):
        return f"({to_text(node)})"
    if isinstance(node, Const) and (node.value < 0 or node.value.denominator != 1):
        return f"({_fraction_text(node.value)})"
    return to_text(node)


def _mul_text(node: Mul) -> str:
    factors = node.factors
    head = ""
    if isinstance(factors[0], Const):
        c = factors[0].value
        factors = factors[1:]
        if c == -1:
            head = "-"
        else:
            head = _fraction_text(c) + "*"
    return head + "*".join(_factor_text(f) for f in factors)


def _is_negative_term(node: Expr) -> bool:
    if isinstance(node, Const):
        return node.value < 0
    if isinstance(node, Mul) and isinstance(node.factors[0], Const):
        return node.factors[0].value < 0
    return False


def _negated_text(node: Expr) -> str:
    if isinstance(node, Const):
        return _fraction_text(-node.value)
    c = node.factors[0].value
    rest = node.factors[1:]
    if c == -1:
        if len(rest) == 1:
            return _factor_text(rest[0]) if isinstance(rest[0], Add) else to_text(rest[0])
        return "*".join(_factor_text(f) for f in rest)
    return _fraction_text(-c) + "*" + "*".join(_factor_text(f) for f in rest)


def to_text(node: Expr) -> str:
    if isinstance(node, Const):
        return _fraction_text(node.value)
    if isinstance(node, (Var, Param)):
        return node.name
    if isinstance(node, Func):
        return _func_text(node)
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, Pow):
        return f"{_base_text(node.base)}^{_exponent_text(node.exp)}"
    if isinstance(node, Mul):
        return _mul_text(node)
    if isinstance(node, Add):
        parts = [to_text(node.terms[0])]
        for term in node.terms[1:]:
            if _is_negative_term(term):
                parts.append(" - " + _negated_text(term))
            else:
                parts.append(" + " + to_text(term))
        return "".join(parts)
    raise TypeError(f"unknown node {type(node).__name__}")
