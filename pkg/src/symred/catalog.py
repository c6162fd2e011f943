"""Classified equations and operators, plus the equivalence group action.

Entries are stored as text in the expression grammar and parsed on load.
Ids are stable: ``thm1.caseN`` (Lie symmetries, normalized to a single
reduction operator), ``thm2.caseN`` (tau = 1 operators; case 5 split into
``+``/``-`` sign variants) and ``tau0.itemN`` (tau = 0 operators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .expr import (
    Expr,
    ExprError,
    Lambda,
    add,
    canonical,
    div,
    lift,
    mul,
    parse,
    pow_,
    sub,
    substitute,
    var,
)
from .model import Pde, ReductionOperator, Tau0, Tau1

PI = math.pi
TAN_DOMAIN = (0.2, PI - 0.2)
WIDE_DOMAIN = (0.5, 3.0)
T_DOMAIN = (0.1, 1.0)
NONZERO = ((-3.0, -0.1), (0.1, 3.0))
POSITIVE = ((0.1, 3.0),)

FUNCTIONS = {"B": 1, "k": 1}


def _p(text: str) -> Expr:
    return parse(text, params=("c", "a"), functions=FUNCTIONS)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    k: Expr
    operator: ReductionOperator
    domain: dict
    params: dict
    citation: str
    generators: tuple[str, ...] = ()
    ode: Expr | None = None
    solution: dict = field(default_factory=dict)
    note: str = ""
    expected: str = "pass"

    @property
    def pde(self) -> Pde:
        return Pde(self.k)

    def instantiate(self) -> tuple[Pde, ReductionOperator]:
        """Equation and operator with function symbols replaced by their recorded solutions."""
        if not self.solution:
            return self.pde, self.operator
        binds = dict(self.solution)
        k = substitute(self.k, binds)
        if self.operator.tau == 1:
            op = Tau1(substitute(self.operator.xi, binds), substitute(self.operator.eta, binds))
        else:
            op = Tau0(substitute(self.operator.eta, binds))
        return Pde(k), op

    def expressions(self) -> list[Expr]:
        out = [self.k, self.operator.eta]
        if self.operator.tau == 1:
            out.append(self.operator.xi)
        if self.ode is not None:
            out.append(self.ode)
        out.extend(self.solution.values())
        return out


def _entry(id, k, op, citation, domain=None, params=None, **kw) -> CatalogEntry:
    dom = {"t": T_DOMAIN, "x": WIDE_DOMAIN}
    dom.update(domain or {})
    return CatalogEntry(id, _p(k), op, dom, params if params is not None else {"c": NONZERO}, citation, **kw)


def _tau1(xi: str, eta: str = "0") -> Tau1:
    return Tau1(_p(xi), _p(eta))


def _tau0(eta: str) -> Tau0:
    return Tau0(_p(eta))


@lru_cache(maxsize=None)
def lie_cases() -> tuple[CatalogEntry, ...]:
    return (
        _entry("thm1.case1", "k(x)", _tau1("0"), "Lie classification, case 1 (arbitrary k)",
               params={}, generators=("d_t",), solution={"k": _p("2 + sin(x)")},
               note="k arbitrary; verified on the sample k = 2 + sin(x)"),
        _entry("thm1.case2", "c", _tau0("0"), "Lie classification, case 2",
               generators=("d_t", "d_x"), note="d_x taken as the tau = 0 operator with eta = 0"),
        _entry("thm1.case3", "c*x^(-2)", _tau1("x/(2*t)"), "Lie classification, case 3",
               generators=("d_t", "2*t*d_t + x*d_x"), note="2t d_t + x d_x divided by 2t; requires t > 0"),
    )


@lru_cache(maxsize=None)
def tau1_cases() -> tuple[CatalogEntry, ...]:
    return (
        _entry("thm2.case1", "c*tan(x)^2", _tau1("-cot(x)"), "tau = 1 classification, case 1",
               domain={"x": TAN_DOMAIN}, note="any c != 0"),
        _entry("thm2.case2", "c*tanh(x)^2", _tau1("-coth(x)"), "tau = 1 classification, case 2",
               note="any c != 0"),
        _entry("thm2.case3", "c*coth(x)^2", _tau1("-tanh(x)"), "tau = 1 classification, case 3"),
        _entry("thm2.case4", "c*x^2", _tau1("-1/x"), "tau = 1 classification, case 4", note="any c != 0"),
        _entry("thm2.case5+", "c^2/2", _tau1("c/2*(3*u - 1)", "-3/4*c^2*u^2*(u - 1)"),
               "tau = 1 classification, case 5 (upper sign)", params={"c": POSITIVE}, note="c > 0"),
        _entry("thm2.case5-", "c^2/2", _tau1("-c/2*(3*u - 1)", "-3/4*c^2*u^2*(u - 1)"),
               "tau = 1 classification, case 5 (lower sign)", params={"c": POSITIVE}, note="c > 0"),
        _entry("thm2.case6", "2*x^(-2)", _tau1("3/x*(u - 1)", "-3/x^2*u*(u - 1)^2"),
               "tau = 1 classification, case 6", params={}),
    )


@lru_cache(maxsize=None)
def tau0_cases() -> tuple[CatalogEntry, ...]:
    return (
        _entry("tau0.item1", "2*B(x)^2", _tau0("B(x)*u^2 - tan(x)*u"), "tau = 0 list, item 1",
               domain={"x": (0.2, PI / 2 - 0.2)}, params={},
               ode=_p("-4*B(x)*B'(x) + 4*B'(x)*tan(x) - B''(x) + 2*B(x) + 2*B(x)^2*tan(x)"),
               solution={"B": _p("tan(x)")}),
        _entry("tau0.item2", "2*B(x)^2", _tau0("B(x)*u^2 + tanh(x)*u"), "tau = 0 list, item 2", params={},
               ode=_p("4*B(x)*B'(x) + 4*B'(x)*tanh(x) + B''(x) + 2*B(x) + 2*B(x)^2*tanh(x)"),
               solution={"B": _p("-tanh(x)")}),
        _entry("tau0.item3", "2*B(x)^2", _tau0("B(x)*u^2 + coth(x)*u"), "tau = 0 list, item 3", params={},
               ode=_p("4*B(x)*B'(x) + 4*B'(x)*coth(x) + B''(x) + 2*B(x) + 2*B(x)^2*coth(x)"),
               solution={"B": _p("-coth(x)")}),
        _entry("tau0.item4", "2*B(x)^2", _tau0("B(x)*u^2 + u/x"), "tau = 0 list, item 4", params={},
               ode=_p("4*x*B(x)*B'(x) + 4*B'(x) + x*B''(x) + 2*B(x)^2"),
               solution={"B": _p("-1/x")}),
        _entry("tau0.item5", "2/x^2", _tau0("(u^2 - 1)/x"), "tau = 0 list, item 5", params={}),
        _entry("tau0.item6", "1/(2*x^2)", _tau0("u^2/(2*x)"), "tau = 0 list, item 6", params={}),
        _entry("tau0.item7", "2*tan(2*x)^2", _tau0("-u^2*tan(2*x)"), "tau = 0 list, item 7",
               domain={"x": TAN_DOMAIN}, params={}),
        _entry("tau0.item8", "2*tanh(2*x)^2", _tau0("u^2*tanh(2*x)"), "tau = 0 list, item 8", params={}),
    )


def all_entries() -> tuple[CatalogEntry, ...]:
    return lie_cases() + tau1_cases() + tau0_cases()


def get_entry(entry_id: str) -> CatalogEntry:
    for entry in all_entries():
        if entry.id == entry_id:
            return entry
    raise KeyError(entry_id)


@dataclass(frozen=True)
class CaseIBranch:
    """psi solving psi' = psi^2 + a, with k = c / psi^2 and operator d_t + psi d_x."""

    id: str
    a: int
    psi: Expr
    domain: tuple[float, float]
    matches: str

    @property
    def k(self) -> Expr:
        return div(_p("c"), pow_(self.psi, 2))

    @property
    def ode_residual(self) -> Expr:
        return sub(parse("psi'(x)", functions={"psi": 1}), add(pow_(parse("psi(x)", functions={"psi": 1}), 2), self.a))

    def operator(self) -> Tau1:
        return Tau1(self.psi, 0)


@lru_cache(maxsize=None)
def case_i_branches() -> tuple[CaseIBranch, ...]:
    return (
        CaseIBranch("case_i.cot", 1, _p("-cot(x)"), TAN_DOMAIN, "thm2.case1"),
        CaseIBranch("case_i.coth", -1, _p("-coth(x)"), WIDE_DOMAIN, "thm2.case2"),
        CaseIBranch("case_i.tanh", -1, _p("-tanh(x)"), WIDE_DOMAIN, "thm2.case3"),
        CaseIBranch("case_i.inv", 0, _p("-1/x"), WIDE_DOMAIN, "thm2.case4"),
    )


def same_form(a: Expr, b: Expr) -> bool:
    """Structural equality after expansion to the canonical monomial form."""
    return canonical(a) == canonical(b)


class EquivalenceError(ExprError):
    pass


@dataclass(frozen=True)
class EquivalenceTransform:
    """t -> e1^2 t + e2, x -> e1 x + e3, u -> u, k -> k / e1^2."""

    e1: Fraction = Fraction(1)
    e2: Fraction = Fraction(0)
    e3: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("e1", "e2", "e3"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.e1 == 0:
            raise EquivalenceError("e1 must be nonzero")

    def old_coordinates(self) -> dict:
        """Old (t, x) written in the new variables."""
        return {
            "t": div(sub(var("t"), self.e2), self.e1**2),
            "x": div(sub(var("x"), self.e3), self.e1),
        }

    def map_interval(self, name: str, interval: tuple[float, float]) -> tuple[float, float]:
        lo, hi = interval
        if name == "t":
            e1 = float(self.e1)
            a, b = e1 * e1 * lo + float(self.e2), e1 * e1 * hi + float(self.e2)
        elif name == "x":
            a, b = float(self.e1) * lo + float(self.e3), float(self.e1) * hi + float(self.e3)
        else:
            return interval
        return (min(a, b), max(a, b))


def apply_equivalence(g: EquivalenceTransform, pde: Pde, op: ReductionOperator) -> tuple[Pde, ReductionOperator]:
    back = g.old_coordinates()
    k = mul(pow_(lift(g.e1), -2), substitute(pde.k, back))
    if op.tau == 1:
        new_op = Tau1(
            mul(pow_(lift(g.e1), -1), substitute(op.xi, back)),
            mul(pow_(lift(g.e1), -2), substitute(op.eta, back)),
        )
    else:
        new_op = Tau0(mul(pow_(lift(g.e1), -1), substitute(op.eta, back)))
    return Pde(k), new_op


def _interval_text(iv) -> str:
    return f"[{float(iv[0])!r}, {float(iv[1])!r}]"


def export_text(entries=None) -> str:
    """Record-per-entry text dump of the catalog (stable, used as a golden file)."""
    entries = all_entries() if entries is None else entries
    blocks = []
    for e in entries:
        lines = [
            f"id: {e.id}",
            f"k: {e.k}",
            f"tau: {e.operator.tau}",
            f"xi: {e.operator.xi}",
            f"eta: {e.operator.eta}",
            "domain: " + "; ".join(f"{name}={_interval_text(e.domain[name])}" for name in sorted(e.domain)),
            "params: " + "; ".join(
                f"{name}=" + "|".join(_interval_text(iv) for iv in e.params[name]) for name in sorted(e.params)
            ),
            f"citation: {e.citation}",
        ]
        if e.generators:
            lines.append("generators: " + "; ".join(e.generators))
        if e.ode is not None:
            lines.append(f"ode: {e.ode}")
        for name in sorted(e.solution):
            lines.append(f"solution: {name}={e.solution[name]}")
        if e.note:
            lines.append(f"note: {e.note}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


__all__ = [
    "CaseIBranch",
    "CatalogEntry",
    "EquivalenceError",
    "EquivalenceTransform",
    "Lambda",
    "all_entries",
    "apply_equivalence",
    "case_i_branches",
    "export_text",
    "get_entry",
    "lie_cases",
    "same_form",
    "tau0_cases",
    "tau1_cases",
]
