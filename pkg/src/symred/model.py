"""The equation family u_t = u_xx + k(x) u^2 (1 - u) and its reduction operators."""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    ONE,
    ZERO,
    Const,
    Expr,
    ExprError,
    U,
    U_T,
    U_X,
    ZeroTestPolicy,
    add,
    function_symbols,
    is_zero,
    lift,
    mul,
    neg,
    pow_,
    sub,
)

_K_CHECK = ZeroTestPolicy(samples=32, param_draws=2)


class ModelError(ExprError):
    pass


@dataclass(frozen=True)
class Pde:
    """A member of the family, identified by its coefficient k(x)."""

    k: Expr

    def __post_init__(self):
        k = lift(self.k)
        object.__setattr__(self, "k", k)
        if k.has("t") or k.has("u"):
            raise ModelError(f"k must depend on x only, got {k}")
        if isinstance(k, Const):
            if k.value == 0:
                raise ModelError("k must not vanish identically")
        elif not function_symbols(k) and is_zero(k, _K_CHECK):
            raise ModelError(f"k = {k} vanishes identically")

    def rhs(self) -> Expr:
        """Reaction term k(x) u^2 (1 - u)."""
        return mul(self.k, pow_(U, 2), sub(1, U))


def rhs(pde: Pde) -> Expr:
    return pde.rhs()


class ReductionOperator:
    """Q = tau d_t + xi d_x + eta d_u with tau normalized to 1, or tau = 0 and xi = 1."""

    tau: int
    xi: Expr
    eta: Expr


@dataclass(frozen=True)
class Tau1(ReductionOperator):
    xi: Expr
    eta: Expr

    def __post_init__(self):
        object.__setattr__(self, "xi", lift(self.xi))
        object.__setattr__(self, "eta", lift(self.eta))

    @property
    def tau(self) -> int:
        return 1

    def __str__(self) -> str:
        return f"d_t + ({self.xi}) d_x + ({self.eta}) d_u"


@dataclass(frozen=True)
class Tau0(ReductionOperator):
    eta: Expr

    def __post_init__(self):
        object.__setattr__(self, "eta", lift(self.eta))

    @property
    def tau(self) -> int:
        return 0

    @property
    def xi(self) -> Expr:
        return ONE

    def __str__(self) -> str:
        return f"d_x + ({self.eta}) d_u"


@dataclass(frozen=True)
class Characteristic:
    """Q[u] = eta - tau u_t - xi u_x, with u_t and u_x as formal jet slots."""

    tau: Expr
    xi: Expr
    eta: Expr

    @property
    def expr(self) -> Expr:
        return add(self.eta, neg(mul(self.tau, U_T)), neg(mul(self.xi, U_X)))

    def __str__(self) -> str:
        return str(self.expr)


def characteristic(op: ReductionOperator) -> Characteristic:
    tau = ONE if op.tau == 1 else ZERO
    return Characteristic(tau, op.xi, op.eta)
