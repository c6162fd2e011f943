"""Recursive-descent parser for the expression grammar.

    expr     := term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' exponent)?
    base     := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' factor
    exponent := '(' signed rational ')' | unsigned integer

Function symbols may carry derivative marks: ``B''(x)`` for single-argument
symbols, ``phi[t,x](t, x)`` in general.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    BUILTINS,
    JET_SLOTS,
    VARIABLES,
    Expr,
    ExprError,
    Func,
    Var,
    add,
    call,
    const,
    div,
    mul,
    neg,
    param,
    pow_,
    sub,
    var,
)

DEFAULT_PARAMS = ("a", "c")


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, op, end
    text: str
    offset: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<op>[-+*/^(),\[\]])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    raw = text.encode("utf-8")
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            offset = len(text[:pos].encode("utf-8"))
            raise ParseError(f"unexpected character {text[pos]!r}", offset)
        kind = m.lastgroup
        if kind != "ws":
            offset = len(text[:pos].encode("utf-8"))
            tokens.append(Token(kind, m.group(), offset))
        pos = m.end()
    tokens.append(Token("end", "", len(raw)))
    return tokens


class Parser:
    def __init__(self, text: str, params: Iterable[str], functions: Mapping[str, int] | Iterable[str]):
        self.tokens = tokenize(text)
        self.i = 0
        self.params = frozenset(params)
        if isinstance(functions, Mapping):
            self.functions = dict(functions)
        else:
            self.functions = {name: None for name in functions}

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            got = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, got {got!r}", self.tok.offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            right = self.term()
            left = add(left, right) if op == "+" else sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance()
            right = self.factor()
            if op.text == "*":
                left = mul(left, right)
            else:
                try:
                    left = div(left, right)
                except ZeroDivisionError:
                    raise ParseError("division by zero", op.offset) from None
        return left

    def factor(self) -> Expr:
        b = self.base()
        if self.tok.text == "^":
            op = self.advance()
            e = self.exponent()
            try:
                return pow_(b, e)
            except ZeroDivisionError:
                raise ParseError("zero raised to a negative power", op.offset) from None
        return b

    def exponent(self) -> Fraction:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            if "." in tok.text:
                raise ParseError("exponent must be an integer or a parenthesised rational", tok.offset)
            return Fraction(int(tok.text))
        if tok.text != "(":
            raise ParseError("expected exponent", tok.offset)
        self.advance()
        sign = 1
        if self.tok.text in ("-", "+"):
            sign = -1 if self.advance().text == "-" else 1
        num = self.tok
        if num.kind != "num" or "." in num.text:
            raise ParseError("expected integer in exponent", num.offset)
        self.advance()
        value = Fraction(int(num.text))
        if self.tok.text == "/":
            self.advance()
            den = self.tok
            if den.kind != "num" or "." in den.text or int(den.text) == 0:
                raise ParseError("expected nonzero integer denominator in exponent", den.offset)
            self.advance()
            value /= int(den.text)
        self.expect(")")
        return sign * value

    def base(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return const(Fraction(tok.text))
        if tok.text == "-":
            self.advance()
            return neg(self.factor())
        if tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            return self.identifier()
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.offset)

    def identifier(self) -> Expr:
        tok = self.advance()
        name = tok.text.rstrip("'")
        primes = len(tok.text) - len(name)
        marks: list[str] | None = None
        if self.tok.text == "[":
            self.advance()
            marks = []
            while True:
                mark = self.tok
                if mark.kind != "ident" or mark.text not in VARIABLES:
                    raise ParseError("expected variable in derivative marks", mark.offset)
                marks.append(self.advance().text)
                if self.tok.text == ",":
                    self.advance()
                    continue
                break
            self.expect("]")

        if self.tok.text != "(":
            if primes or marks is not None:
                raise ParseError("derivative marks need an argument list", self.tok.offset)
            if name in VARIABLES or name in JET_SLOTS:
                return var(name)
            if name in self.params:
                return param(name)
            raise UnknownIdentifier(f"unknown identifier {name!r}", tok.offset)

        self.advance()
        args = [self.expr()]
        while self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")

        if name in BUILTINS:
            if primes or marks is not None:
                raise ParseError(f"derivative marks on builtin {name!r}", tok.offset)
            if len(args) != 1:
                raise ParseError(f"{name} takes one argument", tok.offset)
            return call(name, args[0])
        if name not in self.functions:
            raise UnknownIdentifier(f"unknown function {name!r}", tok.offset)
        arity = self.functions[name]
        if arity is not None and arity != len(args):
            raise ParseError(f"{name} expects {arity} argument(s), got {len(args)}", tok.offset)
        derivs = [0] * len(args)
        if primes:
            if len(args) != 1:
                raise ParseError("primes are only allowed on single-argument functions", tok.offset)
            derivs[0] = primes
        if marks:
            names = [a.name if isinstance(a, Var) else None for a in args]
            for mark in marks:
                if mark not in names:
                    raise ParseError(f"derivative mark {mark!r} is not an argument", tok.offset)
                derivs[names.index(mark)] += 1
        return Func(name, tuple(args), tuple(derivs))


def parse(
    text: str,
    params: Iterable[str] = DEFAULT_PARAMS,
    functions: Mapping[str, int] | Iterable[str] = (),
) -> Expr:
    """Parse ``text`` into an expression.

    ``params`` lists the identifiers treated as symbolic constants and
    ``functions`` the names of unknown function symbols (optionally with
    their arity).
    """
    return Parser(text, params, functions).parse()
