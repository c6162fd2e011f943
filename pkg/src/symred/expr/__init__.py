"""Symbolic kernel: expression trees, parsing, calculus, normal forms and numeric checks."""

from .calculus import Lambda, diff, differentiate, substitute, total_dt, total_dx
from .core import (
    BUILTINS,
    JET_SLOTS,
    ONE,
    T,
    U,
    U_T,
    U_TT,
    U_TX,
    U_X,
    U_XX,
    X,
    VARIABLES,
    ZERO,
    Add,
    ArityError,
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
    const,
    div,
    func,
    function_symbols,
    lift,
    mul,
    neg,
    param,
    parameters,
    pow_,
    size,
    sub,
    var,
)
from .normal import LaurentForm, NotLaurentInU, canonical, expand, normalize_poly, normalize_u_poly
from .numeric import (
    EvaluationError,
    PoleError,
    SamplingStarvation,
    UnboundSymbol,
    Witness,
    ZeroResult,
    ZeroTestPolicy,
    compile_expr,
    eval_numeric,
    evaluate,
    is_zero,
)
from .parser import DEFAULT_PARAMS, ParseError, UnknownIdentifier, parse
from .printer import to_text

t, x, u = Var("t"), Var("x"), Var("u")
