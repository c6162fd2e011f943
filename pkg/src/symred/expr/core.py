"""Immutable expression trees with light canonicalization.

Nodes are built through the smart constructors (``add``, ``mul``, ``pow_``,
...) which flatten nested sums/products, fold rational constants and collect
like terms.  Subtraction, negation and division are expressed through them:
``a - b`` is ``add(a, mul(-1, b))`` and ``a / b`` is ``mul(a, pow_(b, -1))``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

VARIABLES = ("t", "x", "u")
JET_SLOTS = ("u_t", "u_x", "u_tt", "u_tx", "u_xx")
BUILTINS = ("tan", "tanh", "cot", "coth", "sin", "cos", "exp", "ln")


class ExprError(Exception):
    pass


class ArityError(ExprError):
    pass


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        # floats are accepted only when they are exact short decimals
        return Fraction(repr(value))
    raise TypeError(f"cannot use {value!r} as an exact rational")


class Expr:
    __slots__ = ("_hash", "_str", "_free")

    def _key(self) -> tuple:
        raise NotImplementedError

    def _init(self) -> None:
        self._hash = hash((type(self).__name__, self._key()))
        self._str = None
        self._free = None

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._key() == other._key()

    def __ne__(self, other) -> bool:
        return not self == other

    def __setattr__(self, name, value):
        if name in ("_hash", "_str", "_free") or not hasattr(self, "_hash"):
            object.__setattr__(self, name, value)
        else:
            raise AttributeError("Expr nodes are immutable")

    @property
    def children(self) -> tuple[Expr, ...]:
        return ()

    @property
    def free(self) -> frozenset[str]:
        """Names of variables, parameters and function symbols occurring in the tree."""
        if self._free is None:
            names = frozenset(self._own_names())
            for child in self.children:
                names |= child.free
            self._free = names
        return self._free

    def _own_names(self) -> tuple[str, ...]:
        return ()

    def has(self, name: str) -> bool:
        return name in self.free

    def __str__(self) -> str:
        if self._str is None:
            from .printer import to_text

            self._str = to_text(self)
        return self._str

    def __repr__(self) -> str:
        return f"Expr({str(self)!r})"

    # arithmetic sugar
    def __add__(self, other):
        return add(self, lift(other))

    def __radd__(self, other):
        return add(lift(other), self)

    def __sub__(self, other):
        return sub(self, lift(other))

    def __rsub__(self, other):
        return sub(lift(other), self)

    def __mul__(self, other):
        return mul(self, lift(other))

    def __rmul__(self, other):
        return mul(lift(other), self)

    def __truediv__(self, other):
        return div(self, lift(other))

    def __rtruediv__(self, other):
        return div(lift(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return pow_(self, exponent)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = _as_fraction(value)
        self._init()

    def _key(self):
        return (self.value,)


class Var(Expr):
    """One of the independent/dependent variables t, x, u or a jet slot such as u_x."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._init()

    def _key(self):
        return (self.name,)

    def _own_names(self):
        return (self.name,)


class Param(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._init()

    def _key(self):
        return (self.name,)

    def _own_names(self):
        return (self.name,)


class Func(Expr):
    """Unknown function symbol such as B(x) or phi(t, x), with derivative orders per argument."""

    __slots__ = ("name", "args", "derivs")

    def __init__(self, name: str, args: tuple[Expr, ...], derivs: tuple[int, ...] | None = None):
        self.name = name
        self.args = tuple(args)
        if derivs is None:
            derivs = (0,) * len(self.args)
        if len(derivs) != len(self.args) or any(d < 0 for d in derivs):
            raise ArityError(f"bad derivative tags {derivs} for {name}")
        self.derivs = tuple(int(d) for d in derivs)
        self._init()

    def _key(self):
        return (self.name, self.args, self.derivs)

    @property
    def children(self):
        return self.args

    def _own_names(self):
        return (self.name,)

    @property
    def order(self) -> int:
        return sum(self.derivs)


class Call(Expr):
    """Builtin elementary function applied to one argument."""

    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in BUILTINS:
            raise ExprError(f"unknown builtin {fn!r}")
        self.fn = fn
        self.arg = arg
        self._init()

    def _key(self):
        return (self.fn, self.arg)

    @property
    def children(self):
        return (self.arg,)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = tuple(terms)
        self._init()

    def _key(self):
        return self.terms

    @property
    def children(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = tuple(factors)
        self._init()

    def _key(self):
        return self.factors

    @property
    def children(self):
        return self.factors

    def split_coeff(self) -> tuple[Fraction, Expr]:
        first = self.factors[0]
        if isinstance(first, Const):
            rest = self.factors[1:]
            return first.value, rest[0] if len(rest) == 1 else Mul(rest)
        return Fraction(1), self


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        self.base = base
        self.exp = _as_fraction(exp)
        self._init()

    def _key(self):
        return (self.base, self.exp)

    @property
    def children(self):
        return (self.base,)


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)


def lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(_as_fraction(value))


def const(value) -> Const:
    return Const(_as_fraction(value))


def var(name: str) -> Var:
    return Var(name)


def param(name: str) -> Param:
    return Param(name)


def func(name: str, *args, derivs=None) -> Func:
    return Func(name, tuple(lift(a) for a in args), derivs)


def call(fn: str, arg) -> Expr:
    arg = lift(arg)
    if isinstance(arg, Const) and arg.value == 0:
        if fn in ("tan", "tanh", "sin"):
            return ZERO
        if fn in ("cos", "exp"):
            return ONE
    if fn == "ln" and arg == ONE:
        return ZERO
    return Call(fn, arg)


def _term_parts(term: Expr) -> tuple[Fraction, Expr]:
    if isinstance(term, Mul):
        return term.split_coeff()
    return Fraction(1), term


def add(*terms) -> Expr:
    flat: list[Expr] = []
    stack = [lift(t) for t in reversed(terms)]
    while stack:
        item = stack.pop()
        if isinstance(item, Add):
            stack.extend(reversed(item.terms))
        else:
            flat.append(item)

    # collected terms keep first-occurrence order; None marks the constant slot
    coeffs: dict[Expr | None, Fraction] = {}
    for item in flat:
        if isinstance(item, Const):
            coeffs[None] = coeffs.get(None, Fraction(0)) + item.value
            continue
        c, core = _term_parts(item)
        coeffs[core] = coeffs.get(core, Fraction(0)) + c

    out: list[Expr] = []
    for core, c in coeffs.items():
        if c == 0:
            continue
        if core is None:
            out.append(Const(c))
        elif c == 1:
            out.append(core)
        else:
            factors = core.factors if isinstance(core, Mul) else (core,)
            out.append(Mul((Const(c),) + factors))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def mul(*factors) -> Expr:
    flat: list[Expr] = []
    stack = [lift(f) for f in reversed(factors)]
    while stack:
        item = stack.pop()
        if isinstance(item, Mul):
            stack.extend(reversed(item.factors))
        else:
            flat.append(item)

    coeff = Fraction(1)
    powers: dict[Expr, Fraction] = {}
    for item in flat:
        if isinstance(item, Const):
            coeff *= item.value
            continue
        if isinstance(item, Pow):
            base, e = item.base, item.exp
        else:
            base, e = item, Fraction(1)
        powers[base] = powers.get(base, Fraction(0)) + e
    if coeff == 0:
        return ZERO

    out: list[Expr] = []
    needs_pass = False
    for base, e in powers.items():
        piece = pow_(base, e)
        if isinstance(piece, (Const, Mul)):
            needs_pass = True
        if piece != ONE:
            out.append(piece)
    if needs_pass:
        return mul(Const(coeff), *out)
    if not out:
        return Const(coeff)
    if coeff == 1 and len(out) == 1:
        return out[0]
    if coeff != 1:
        out.insert(0, Const(coeff))
    return Mul(tuple(out))


def pow_(base, exponent) -> Expr:
    base = lift(base)
    e = _as_fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0:
            if e < 0:
                raise ZeroDivisionError("0 raised to a negative power")
            return ZERO
        if base.value == 1:
            return ONE
        if e.denominator == 1:
            return Const(base.value ** int(e))
        return Pow(base, e)
    if isinstance(base, Pow) and e.denominator == 1:
        return pow_(base.base, base.exp * e)
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*(pow_(f, e) for f in base.factors))
    return Pow(base, e)


def neg(e) -> Expr:
    return mul(MINUS_ONE, lift(e))


def sub(a, b) -> Expr:
    return add(lift(a), neg(lift(b)))


def div(a, b) -> Expr:
    return mul(lift(a), pow_(lift(b), -1))


T = Var("t")
X = Var("x")
U = Var("u")
U_T = Var("u_t")
U_X = Var("u_x")
U_XX = Var("u_xx")
U_TX = Var("u_tx")
U_TT = Var("u_tt")


def function_symbols(e: Expr) -> frozenset[str]:
    """Names of the unknown function symbols in ``e``."""
    found: set[str] = set()
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Func):
            found.add(node.name)
        stack.extend(node.children)
    return frozenset(found)


def parameters(e: Expr) -> frozenset[str]:
    found: set[str] = set()
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Param):
            found.add(node.name)
        stack.extend(node.children)
    return frozenset(found)


def size(e: Expr) -> int:
    """Number of distinct nodes (shared subtrees counted once)."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.extend(node.children)
    return len(seen)
