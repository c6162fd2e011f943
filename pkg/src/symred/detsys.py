"""Determining equations for reduction operators of u_t = u_xx + k(x) u^2 (1 - u).

Every equation ``lhs = rhs`` is stored as the residual ``lhs - rhs``.
Two independent derivations are provided: hand-transcribed systems
(``determining_system_tau1``, ``determining_residual_tau0``) and the
prolongation route (``conditional_invariance_residual``), which applies the
second prolongation of Q to the equation and restricts to the manifold of
the equation and the invariant surface condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    ZERO,
    Expr,
    ExprError,
    Func,
    T,
    U,
    U_X,
    U_XX,
    X,
    ZeroTestPolicy,
    add,
    canonical,
    diff,
    div,
    function_symbols,
    is_zero,
    lift,
    mul,
    neg,
    normalize_u_poly,
    pow_,
    sub,
    substitute,
    total_dt,
    total_dx,
)
from .model import Pde, ReductionOperator, Tau0, Tau1

R = Fraction


@dataclass(frozen=True)
class Residual:
    expr: Expr
    tag: str
    note: str = ""


@dataclass(frozen=True)
class DeterminingSystem:
    residuals: tuple[Residual, ...]
    title: str = ""

    def __len__(self) -> int:
        return len(self.residuals)

    def __iter__(self):
        return iter(self.residuals)

    def __getitem__(self, i) -> Residual:
        return self.residuals[i]

    @property
    def exprs(self) -> list[Expr]:
        return [r.expr for r in self.residuals]

    @property
    def unknowns(self) -> list[str]:
        names: set[str] = set()
        for r in self.residuals:
            names |= function_symbols(r.expr)
        return sorted(names)

    def substitute(self, bindings) -> DeterminingSystem:
        return DeterminingSystem(
            tuple(Residual(substitute(r.expr, bindings), r.tag, r.note) for r in self.residuals), self.title
        )

    def to_text(self, normalize: bool = True) -> str:
        lines = []
        if self.title:
            lines.append(f"# {self.title}")
        if self.unknowns:
            lines.append(f"# unknowns: {', '.join(self.unknowns)}")
        for r in self.residuals:
            comment = f"# [{r.tag}] {r.note}".rstrip()
            lines.append(comment)
            lines.append(str(canonical(r.expr) if normalize else r.expr))
        return "\n".join(lines) + "\n"


def _d(e: Expr, *vs: str) -> Expr:
    return diff(e, *vs)


def determining_system_tau1(pde: Pde, xi, eta) -> DeterminingSystem:
    """Four determining equations for Q = d_t + xi d_x + eta d_u."""
    xi, eta = lift(xi), lift(eta)
    k = pde.k
    kx = _d(k, "x")
    u2 = pow_(U, 2)
    u3 = pow_(U, 3)
    one_minus_u = sub(1, U)
    xi_u = _d(xi, "u")
    xi_x = _d(xi, "x")

    a = _d(xi, "u", "u")
    b = add(mul(2, xi, xi_u), mul(-2, _d(xi, "x", "u")), _d(eta, "u", "u"))
    c = add(
        mul(2, xi, xi_x),
        mul(-2, eta, xi_u),
        mul(-3, k, xi_u, u3),
        mul(3, k, xi_u, u2),
        mul(2, _d(eta, "x", "u")),
        neg(_d(xi, "x", "x")),
        _d(xi, "t"),
    )
    d = add(
        neg(mul(k, _d(eta, "u"), u2, one_minus_u)),
        mul(2, k, xi_x, u2, one_minus_u),
        _d(eta, "x", "x"),
        mul(-2, xi_x, eta),
        neg(_d(eta, "t")),
        mul(kx, xi, u2, one_minus_u),
        mul(2, k, eta, U),
        mul(-3, k, eta, u2),
    )
    return DeterminingSystem(
        (
            Residual(a, "tau1.a", "xi_uu"),
            Residual(b, "tau1.b", "2 xi xi_u - 2 xi_xu + eta_uu"),
            Residual(c, "tau1.c", "first-order balance in xi and eta"),
            Residual(d, "tau1.d", "zeroth-order balance, rhs moved to the left"),
        ),
        "tau = 1 determining equations",
    )


def determining_residual_tau0(pde: Pde, eta) -> Expr:
    """Single determining equation for Q = d_x + eta d_u."""
    eta = lift(eta)
    k = pde.k
    kx = _d(k, "x")
    eta_u = _d(eta, "u")
    u2, u3 = pow_(U, 2), pow_(U, 3)
    return add(
        neg(_d(eta, "x", "x")),
        mul(-2, eta, _d(eta, "x", "u")),
        neg(mul(pow_(eta, 2), _d(eta, "u", "u"))),
        mul(k, eta_u, u2),
        neg(mul(k, eta_u, u3)),
        _d(eta, "t"),
        mul(kx, u3),
        neg(mul(kx, u2)),
        mul(-2, k, eta, U),
        mul(3, k, eta, u2),
    )


def determining_system_tau0(pde: Pde, eta) -> DeterminingSystem:
    return DeterminingSystem(
        (Residual(determining_residual_tau0(pde, eta), "tau0", "determining equation for eta"),),
        "tau = 0 determining equation",
    )


def conditional_invariance_residual(pde: Pde, op: ReductionOperator) -> Expr:
    """Second prolongation of Q applied to the equation, restricted to the manifold.

    For tau = 1 the result is a polynomial in the slot u_x with coefficients in
    (t, x, u); for tau = 0 it is an expression in (t, x, u) alone.
    """
    f = pde.rhs()
    f_x = _d(f, "x")
    f_u = _d(f, "u")
    eta = op.eta
    if op.tau == 1:
        xi = op.xi
        eta_t = sub(total_dt(eta), mul(U_X, total_dt(xi)))
        eta_x = sub(total_dx(eta), mul(U_X, total_dx(xi)))
        eta_xx = sub(total_dx(eta_x), mul(U_XX, total_dx(xi)))
        raw = add(eta_t, neg(eta_xx), neg(mul(xi, f_x)), neg(mul(eta, f_u)))
        u_t = sub(eta, mul(xi, U_X))
        return substitute(raw, {"u_xx": sub(u_t, f), "u_t": u_t})
    eta_t = total_dt(eta)
    eta_xx = total_dx(total_dx(eta))
    raw = add(eta_t, neg(eta_xx), neg(f_x), neg(mul(eta, f_u)))
    u_xx = add(_d(eta, "x"), mul(eta, _d(eta, "u")))
    return substitute(raw, {"u_x": eta, "u_xx": u_xx, "u_t": add(u_xx, f)})


def split_jet(e: Expr, slot: str = "u_x", degree: int = 3) -> list[Expr]:
    """Coefficients of slot^degree, ..., slot^0 of a polynomial in ``slot``.

    Taken as Taylor coefficients at slot = 0, which needs no expansion of the
    (often large) coefficient expressions.
    """
    coeffs = []
    current = e
    derivs = [e]
    for _ in range(degree):
        current = diff(current, slot)
        derivs.append(current)
    for j in range(degree, -1, -1):
        coeffs.append(mul(R(1, math.factorial(j)), substitute(derivs[j], {slot: 0})))
    return coeffs


# Relation between the prolongation route's u_x coefficients and the
# transcribed tau = 1 residuals (a), (b), (c), (d).
TAU1_ROUTE_SIGNS = (1, -1, -1, -1)


def prolongation_system(pde: Pde, op: ReductionOperator) -> DeterminingSystem:
    residual = conditional_invariance_residual(pde, op)
    if op.tau == 1:
        coeffs = split_jet(residual, "u_x", 3)
        notes = ("u_x^3 coefficient (= +a)", "u_x^2 coefficient (= -b)", "u_x^1 coefficient (= -c)",
                 "u_x^0 coefficient (= -d)")
        return DeterminingSystem(
            tuple(Residual(c, f"prolong.{j}", n) for j, c, n in zip((3, 2, 1, 0), coeffs, notes)),
            "prolongation route, split in u_x",
        )
    return DeterminingSystem(
        (Residual(residual, "prolong.tau0", "restricted prolongation (= +tau0 residual)"),),
        "prolongation route",
    )


@dataclass(frozen=True)
class Tau1Ansatz:
    """xi = phi u + psi, eta = -phi^2 u^3 / 3 - phi psi u^2 + phi_x u^2 + A u + B."""

    phi: Expr = field(default_factory=lambda: Func("phi", (T, X)))
    psi: Expr = field(default_factory=lambda: Func("psi", (T, X)))
    A: Expr = field(default_factory=lambda: Func("A", (T, X)))
    B: Expr = field(default_factory=lambda: Func("B", (T, X)))

    def __post_init__(self):
        for name in ("phi", "psi", "A", "B"):
            value = lift(getattr(self, name))
            if value.has("u"):
                raise ExprError(f"{name} must not depend on u")
            object.__setattr__(self, name, value)

    @property
    def xi(self) -> Expr:
        return add(mul(self.phi, U), self.psi)

    @property
    def eta(self) -> Expr:
        phi, psi = self.phi, self.psi
        return add(
            mul(R(-1, 3), pow_(phi, 2), pow_(U, 3)),
            neg(mul(phi, psi, pow_(U, 2))),
            mul(_d(phi, "x"), pow_(U, 2)),
            mul(self.A, U),
            self.B,
        )

    def operator(self) -> Tau1:
        return Tau1(self.xi, self.eta)


def reduced_system_ansatz(pde: Pde, ansatz: Tau1Ansatz) -> DeterminingSystem:
    """The split system for phi, psi, A, B (nine equations).

    The fifth equation carries +2/3 phi^2 phi_x; that is the coefficient that
    direct substitution of the ansatz produces (u^4 term of residual d).
    """
    k = pde.k
    phi, psi, A, B = ansatz.phi, ansatz.psi, ansatz.A, ansatz.B
    kx = _d(k, "x")
    px, pxx, pxxx = _d(phi, "x"), _d(phi, "x", "x"), _d(phi, "x", "x", "x")
    pt, ptx = _d(phi, "t"), _d(phi, "t", "x")
    sx, sxx, st = _d(psi, "x"), _d(psi, "x", "x"), _d(psi, "t")
    Ax, Axx, At = _d(A, "x"), _d(A, "x", "x"), _d(A, "t")
    Bxx, Bt = _d(B, "x", "x"), _d(B, "t")
    sq = lambda e: pow_(e, 2)  # noqa: E731

    eqs = [
        add(mul(R(2, 3), pow_(phi, 3)), mul(-3, k, phi)),
        add(mul(-4, phi, px), mul(2, sq(phi), psi), mul(3, k, phi)),
        add(mul(-2, px, psi), pt, mul(-2, phi, sx), mul(-2, phi, A), mul(3, pxx)),
        add(mul(2, psi, sx), mul(-2, phi, B), mul(2, Ax), neg(sxx), st),
        sub(
            add(mul(R(2, 3), sq(phi), px), mul(R(1, 3), k, sq(phi)), mul(k, phi, psi)),
            add(mul(3, k, px), mul(kx, phi)),
        ),
        sub(
            add(
                mul(R(2, 3), sq(phi), sx),
                mul(R(-2, 3), phi, pxx),
                mul(R(-8, 3), sq(px)),
                mul(-2, k, sx),
                mul(-2, k, A),
                mul(2, phi, px, psi),
            ),
            add(mul(R(-2, 3), phi, pt), mul(-2, k, px), neg(mul(kx, phi)), mul(kx, psi)),
        ),
        sub(
            add(
                mul(-2, px, A),
                pxxx,
                mul(2, phi, psi, sx),
                mul(k, A),
                neg(mul(pxx, psi)),
                mul(-4, px, sx),
                neg(mul(phi, sxx)),
                mul(2, k, sx),
            ),
            add(ptx, neg(mul(pt, psi)), neg(mul(phi, st)), neg(mul(kx, psi)), mul(3, k, B)),
        ),
        sub(add(Axx, mul(-2, sx, A)), add(At, mul(2, px, B), mul(-2, k, B))),
        add(mul(-2, sx, B), Bxx, neg(Bt)),
    ]
    notes = [
        "2/3 phi^3 - 3 k phi",
        "-4 phi phi_x + 2 phi^2 psi + 3 k phi",
        "-2 phi_x psi + phi_t - 2 phi psi_x - 2 phi A + 3 phi_xx",
        "2 psi psi_x - 2 phi B + 2 A_x - psi_xx + psi_t",
        "2/3 phi^2 phi_x + 1/3 k phi^2 + k phi psi - 3 k phi_x - k_x phi",
        "psi_x / A balance",
        "third-order balance",
        "A_xx - 2 psi_x A - A_t - 2 phi_x B + 2 k B",
        "B_xx - 2 psi_x B - B_t",
    ]
    return DeterminingSystem(
        tuple(Residual(e, f"ansatz.{i + 1}", n) for i, (e, n) in enumerate(zip(eqs, notes))),
        "tau = 1 system under the ansatz xi = phi u + psi",
    )


# Which u-power of residuals (c) and (d) each ansatz equation comes from.
ANSATZ_SOURCES = {
    0: ("c", 3), 1: ("c", 2), 2: ("c", 1), 3: ("c", 0),
    4: ("d", 4), 5: ("d", 3), 6: ("d", 2), 7: ("d", 1), 8: ("d", 0),
}


class ClosureSingular(ExprError):
    pass


@dataclass(frozen=True)
class ClosureResult:
    ansatz: Tau1Ansatz
    pde: Pde
    constraint: Expr

    @property
    def operator(self) -> Tau1:
        return self.ansatz.operator()


def case_ii_closure(phi, policy: ZeroTestPolicy | None = None) -> ClosureResult:
    """psi, A, B and k forced by a nonzero, t-independent phi(x)."""
    phi = lift(phi)
    px, pxx = _d(phi, "x"), _d(phi, "x", "x")
    k = mul(R(2, 9), pow_(phi, 2))
    psi = div(sub(mul(6, px), pow_(phi, 2)), mul(3, phi))
    A = div(sub(mul(4, phi, px), mul(3, pxx)), mul(6, phi))
    denom = mul(2, sub(mul(2, pow_(phi, 2)), mul(9, px)))
    if is_zero(denom, policy):
        raise ClosureSingular(f"2 phi^2 - 9 phi_x vanishes identically for phi = {phi}")
    B = div(mul(9, sub(mul(2, _d(psi, "x"), A), _d(A, "x", "x"))), denom)
    constraint = add(mul(3, pow_(px, 2)), mul(pow_(phi, 2), px))
    return ClosureResult(Tau1Ansatz(phi, psi, A, B), Pde(k), constraint)


def _phi_name(p: int) -> str:
    return f"phi_{p}" if p >= 0 else f"phi_m{-p}"


@dataclass(frozen=True)
class LaurentAnsatz:
    """eta = sum_{p=-m}^{n} phi_p(t, x) u^p; missing coefficients are symbolic."""

    m: int
    n: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ExprError("m and n must be non-negative")
        full = {}
        for p in range(-self.m, self.n + 1):
            value = self.coeffs.get(p)
            full[p] = Func(_phi_name(p), (T, X)) if value is None else lift(value)
            if full[p].has("u"):
                raise ExprError(f"coefficient of u^{p} must not depend on u")
        if all(v == ZERO for v in full.values()):
            raise ExprError("at least one coefficient must be nonzero")
        object.__setattr__(self, "coeffs", full)

    @property
    def eta(self) -> Expr:
        return add(*(mul(c, pow_(U, p)) for p, c in sorted(self.coeffs.items())))


def split_laurent_ansatz(pde: Pde, ansatz: LaurentAnsatz) -> DeterminingSystem:
    residual = determining_residual_tau0(pde, ansatz.eta)
    form = normalize_u_poly(residual)
    return DeterminingSystem(
        tuple(Residual(form[p], f"laurent.u^{p}", f"coefficient of u^{p}") for p in reversed(form.powers())),
        f"tau = 0 equation split in powers of u (m={ansatz.m}, n={ansatz.n})",
    )


__all__ = [
    "ANSATZ_SOURCES",
    "ClosureResult",
    "ClosureSingular",
    "DeterminingSystem",
    "LaurentAnsatz",
    "Residual",
    "TAU1_ROUTE_SIGNS",
    "Tau1Ansatz",
    "case_ii_closure",
    "conditional_invariance_residual",
    "determining_residual_tau0",
    "determining_system_tau0",
    "determining_system_tau1",
    "prolongation_system",
    "reduced_system_ansatz",
    "split_jet",
    "split_laurent_ansatz",
]
