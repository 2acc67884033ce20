"""Arithmetic expressions used in problem files.

Grammar: decimal literals, variables ``t`` and ``s``, binary ``+ - * / ^``,
unary minus, parentheses and the calls ``sin cos exp ln sqrt``. Binding
strength, loosest first: ``+ -``, ``* /``, unary minus, ``^`` (right
associative). There is no implicit multiplication.

Evaluation works elementwise on numpy arrays as well as on floats::

    >>> e = parse("2 - 0.5*t")
    >>> evaluate(e, t=1.0)
    1.5
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExprSyntaxError

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")
VARIABLES = ("t", "s")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)

# left binding powers of infix operators
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.advance()
        if text != value:
            what = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def expression(self, rbp=0):
        left = self.prefix()
        while True:
            kind, text, _ = self.peek()
            if kind != "op" or text not in _INFIX or _INFIX[text] <= rbp:
                return left
            self.advance()
            if text == "^":
                # right associative; exponent may carry its own sign
                right = self.expression(_INFIX["^"] - 1) if self.peek()[1] != "-" \
                    else self.prefix()
            else:
                right = self.expression(_INFIX[text])
            left = BinOp(text, left, right)

    def prefix(self):
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expression()
                self.expect(")")
                return Call(text, arg)
            raise ExprSyntaxError(f"unknown name {text!r}", pos)
        if text == "-":
            return Neg(self.expression(_UNARY_BP))
        if text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse(text: str):
    """Parse ``text`` into an expression tree; the whole input must be used."""
    p = _Parser(text)
    tree = p.expression()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {tok!r}", pos)
    return tree


def _check(cond, message):
    if np.any(cond):
        raise DomainError(message)


def evaluate(e, t=0.0, s=0.0):
    """Evaluate ``e`` in double precision; ``t`` and ``s`` may be arrays."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return t if e.name == "t" else s
    if isinstance(e, Neg):
        return -evaluate(e.operand, t, s)
    if isinstance(e, BinOp):
        a = evaluate(e.left, t, s)
        b = evaluate(e.right, t, s)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            _check(np.asarray(b) == 0, "division by zero")
            return a / b
        with np.errstate(all="ignore"):
            out = np.power(np.asarray(a, dtype=float), b)
        _check(~np.isfinite(out) & np.isfinite(a) & np.isfinite(b),
               "power outside its domain")
        return out if np.ndim(out) else float(out)
    if isinstance(e, Call):
        x = evaluate(e.arg, t, s)
        if e.func == "ln":
            _check(np.asarray(x) <= 0, "ln of a nonpositive number")
            return np.log(x)
        if e.func == "sqrt":
            _check(np.asarray(x) < 0, "sqrt of a negative number")
            return np.sqrt(x)
        return getattr(np, e.func)(x)
    raise TypeError(f"not an expression node: {e!r}")


_PREC = {"+": 10, "-": 10, "*": 20, "/": 20}


def to_text(e) -> str:
    """Canonical printer; ``parse(to_text(e)) == e`` for every tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        inner = to_text(e.operand)
        if isinstance(e.operand, BinOp) and e.operand.op != "^" \
                or isinstance(e.operand, Neg) or _negative_literal(e.operand):
            inner = f"({inner})"
        return f"-{inner}"
    if e.op == "^":
        left = _atom(e.left)
        right = _atom(e.right) if not (isinstance(e.right, BinOp) and e.right.op == "^") \
            else to_text(e.right)
        return f"{left}^{right}"
    prec = _PREC[e.op]
    left = to_text(e.left)
    if isinstance(e.left, BinOp) and e.left.op != "^" and _PREC[e.left.op] < prec:
        left = f"({left})"
    right = to_text(e.right)
    if isinstance(e.right, BinOp) and e.right.op != "^" and _PREC[e.right.op] <= prec \
            or isinstance(e.right, Neg) or _negative_literal(e.right):
        right = f"({right})"
    return f"{left} {e.op} {right}"


def _negative_literal(e):
    return isinstance(e, Num) and (e.value < 0 or str(e.value).startswith("-"))


def _atom(e):
    text = to_text(e)
    if isinstance(e, (BinOp, Neg)) or _negative_literal(e) or "e" in text and isinstance(e, Num):
        return f"({text})"
    return text


class Expression:
    """Parsed expression bound to its source text."""

    def __init__(self, text: str):
        self.text = text
        self.tree = parse(text)

    def __call__(self, t=0.0, s=0.0):
        return evaluate(self.tree, t, s)

    def __repr__(self):
        return f"Expression({self.text!r})"
