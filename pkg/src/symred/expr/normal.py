"""Expansion into a canonical sum of monomials, and Laurent splitting in one variable.

A monomial is a sorted tuple of ``(atom, exponent)`` pairs.  Atoms are
variables, parameters, function symbols, builtin calls (with normalized
argument) and powers of sums that cannot be expanded.  ``cot`` and ``coth``
are rewritten as reciprocal ``tan``/``tanh`` so the tan-closed derivative
rules collapse syntactically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    ZERO,
    Add,
    Call,
    Const,
    Expr,
    ExprError,
    Func,
    Mul,
    Param,
    Pow,
    Var,
    add,
    call,
    mul,
    pow_,
)

Monomial = tuple  # tuple[tuple[Expr, Fraction], ...]
Poly = dict  # dict[Monomial, Fraction]


class NotLaurentInU(ExprError):
    pass


def _sort_key(atom: Expr) -> str:
    return str(atom)


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps: dict[Expr, Fraction] = dict(a)
    for atom, e in b:
        exps[atom] = exps.get(atom, Fraction(0)) + e
    return tuple(sorted(((k, v) for k, v in exps.items() if v != 0), key=lambda kv: _sort_key(kv[0])))


def _poly_add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, Fraction(0)) + c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, Fraction(0)) + c1 * c2
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _poly_pow(p: Poly, n: int) -> Poly:
    result: Poly = {(): Fraction(1)}
    base = p
    while n:
        if n & 1:
            result = _poly_mul(result, base)
        n >>= 1
        if n:
            base = _poly_mul(base, base)
    return result


def _atom_poly(atom: Expr, e=Fraction(1)) -> Poly:
    return {((atom, Fraction(e)),): Fraction(1)}


def _monomial_power(m: Monomial, c: Fraction, e: Fraction) -> Poly | None:
    """(c * m)^e for a single monomial, or None when that is not exact."""
    if e.denominator != 1:
        # only a bare atom takes a fractional power; anything else stays opaque
        if c == 1 and len(m) == 1 and m[0][1] == 1:
            return {((m[0][0], e),): Fraction(1)}
        return None
    return {tuple((atom, k * e) for atom, k in m): c ** int(e)}


def expand(e: Expr) -> Poly:
    memo: dict[int, Poly] = {}

    def go(node: Expr) -> Poly:
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = {(): node.value} if node.value != 0 else {}
        elif isinstance(node, (Var, Param)):
            out = _atom_poly(node)
        elif isinstance(node, Func):
            out = _atom_poly(Func(node.name, tuple(canonical(a) for a in node.args), node.derivs))
        elif isinstance(node, Call):
            arg = canonical(node.arg)
            if node.fn == "cot":
                out = _atom_poly(call("tan", arg), -1)
            elif node.fn == "coth":
                out = _atom_poly(call("tanh", arg), -1)
            else:
                atom = call(node.fn, arg)
                out = {(): Fraction(1)} if atom == Const(1) else ({} if atom == ZERO else _atom_poly(atom))
        elif isinstance(node, Add):
            out = {}
            for t in node.terms:
                out = _poly_add(out, go(t))
        elif isinstance(node, Mul):
            out = {(): Fraction(1)}
            for f in node.factors:
                out = _poly_mul(out, go(f))
                if not out:
                    break
        elif isinstance(node, Pow):
            base = go(node.base)
            e = node.exp
            if not base:
                if e < 0:
                    raise ZeroDivisionError("expanded base is zero")
                out = {}
            elif e.denominator == 1 and e > 0:
                out = _poly_pow(base, int(e))
            elif len(base) == 1:
                (m, c), = base.items()
                out = _monomial_power(m, c, e)
                if out is None:
                    out = _atom_poly(rebuild(base), e)
            else:
                out = _atom_poly(rebuild(base), e)
        else:
            raise TypeError(type(node).__name__)
        memo[key] = out
        return out

    return go(e)


def _sorted_monomials(p: Poly) -> list:
    def key(item):
        m, _ = item
        return tuple((_sort_key(a), float(e), str(e)) for a, e in m)

    return sorted(p.items(), key=key)


def rebuild(p: Poly) -> Expr:
    terms = []
    for m, c in _sorted_monomials(p):
        terms.append(mul(Const(c), *(pow_(atom, e) for atom, e in m)))
    return add(*terms) if terms else ZERO


def canonical(e: Expr) -> Expr:
    """Expanded, deterministically ordered form of ``e``."""
    return rebuild(expand(e))


@dataclass(frozen=True)
class LaurentForm:
    """Coefficients of integer powers of one variable; coefficients are free of it."""

    coeffs: dict = field(default_factory=dict)  # dict[int, Expr]
    variable: str = "u"

    @property
    def min_power(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    @property
    def max_power(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    def __getitem__(self, p: int) -> Expr:
        return self.coeffs.get(p, ZERO)

    def powers(self) -> list[int]:
        return sorted(self.coeffs)

    def to_expr(self) -> Expr:
        from .core import Var

        v = Var(self.variable)
        return add(*(mul(self.coeffs[p], pow_(v, p)) for p in self.powers()))


def normalize_poly(e: Expr, variable: str = "u") -> LaurentForm:
    """Split ``e`` into coefficients of integer powers of ``variable``."""
    if variable not in e.free:
        c = canonical(e)
        return LaurentForm({0: c} if c != ZERO else {}, variable)
    grouped: dict[int, Poly] = {}
    for m, c in expand(e).items():
        power = 0
        rest = []
        for atom, k in m:
            if isinstance(atom, Var) and atom.name == variable:
                if k.denominator != 1:
                    raise NotLaurentInU(f"non-integer power {k} of {variable}")
                power = int(k)
            elif variable in atom.free:
                raise NotLaurentInU(f"{variable} occurs inside {atom}")
            else:
                rest.append((atom, k))
        bucket = grouped.setdefault(power, {})
        bucket[tuple(rest)] = bucket.get(tuple(rest), Fraction(0)) + c
    coeffs = {}
    for p in sorted(grouped):
        poly = {m: c for m, c in grouped[p].items() if c != 0}
        if poly:
            coeffs[p] = rebuild(poly)
    return LaurentForm(coeffs, variable)


def normalize_u_poly(e: Expr) -> LaurentForm:
    """Laurent coefficients of ``e`` in u."""
    return normalize_poly(e, "u")
