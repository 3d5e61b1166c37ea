"""Scalar expressions in ``t`` and ``eps`` with exact symbolic differentiation.

Grammar (precedence high to low; ``^`` is right-associative, the rest left)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" expo)?
    expo    := "-" expo | power          # must fold to an integer in [-9, 9]
    atom    := NUMBER | "t" | "eps" | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := "sin" | "cos" | "exp" | "log" | "sqrt"

Expressions are immutable and hashable, so derivative trees are cached per
``(expr, var, order)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

VARIABLES = ("t", "eps")
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
MAX_EXPONENT = 9


class ParseError(ValueError):
    """Syntax error; ``offset`` is the byte offset into the source string."""

    def __init__(self, message: str, offset: int, source: str = ""):
        self.offset = offset
        self.source = source
        super().__init__(f"{message} at offset {offset}")


class DomainError(ArithmeticError):
    """Evaluation left the domain of log/sqrt/division/negative powers."""


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Func]

ZERO = Num(0.0)
ONE = Num(1.0)


# ------------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos), src)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, _byte_offset(self.src, tok[2]), self.src)

    def expect(self, text):
        tok = self.peek()
        if tok[1] != text or tok[0] == "end":
            self.error(f"expected {text!r}")
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            tok = self.advance()
            expo = self.expo()
            try:
                k = _fold_constant(expo)
            except (ValueError, DomainError):
                self.error("exponent must be a constant integer", tok)
            if k != int(k) or abs(k) > MAX_EXPONENT:
                self.error(f"exponent must be an integer in [-{MAX_EXPONENT}, {MAX_EXPONENT}]", tok)
            return Pow(base, int(k))
        return base

    def expo(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.advance()
            return Neg(self.expo())
        return self.power()

    def atom(self):
        tok = self.peek()
        kind, text, _ = tok
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            self.error(f"unknown identifier {text!r}", tok)
        if text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected token {text!r}")


def _fold_constant(e: Expr) -> float:
    if isinstance(e, Var):
        raise ValueError("not constant")
    return float(evaluate(e, 0.0, 0.0))


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree; raises :class:`ParseError`."""
    if not isinstance(src, str) or not src.strip():
        raise ParseError("empty expression", 0, src if isinstance(src, str) else "")
    return _Parser(src).parse()


# -------------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_string(e: Expr) -> str:
    """Render ``e`` in the parse grammar; ``parse(to_string(e))`` evaluates identically."""
    return _show(e, 0)


def _show(e: Expr, ctx: int) -> str:
    # ctx: binding strength required by the parent (0 lowest, 4 = atom)
    if isinstance(e, Num):
        s = repr(float(e.value))
        if e.value < 0 or s in ("inf", "-inf", "nan"):
            s = f"({s})"
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({_show(e.arg, 0)})"
    if isinstance(e, Pow):
        base = _show(e.base, 4)
        k = f"({e.exponent})" if e.exponent < 0 else str(e.exponent)
        return _wrap(f"{base}^{k}", 3, ctx)
    if isinstance(e, Neg):
        return _wrap(f"-{_show(e.arg, 2.5)}", 2.5, ctx)
    p = _PREC[e.op]
    # left-assoc: right operand needs strictly higher binding
    s = f"{_show(e.left, p)} {e.op} {_show(e.right, p + 0.5)}"
    return _wrap(s, p, ctx)


def _wrap(s: str, prec: float, ctx: float) -> str:
    return f"({s})" if prec < ctx else s


# ----------------------------------------------------------------- evaluation


def evaluate(e: Expr, t, eps):
    """Evaluate ``e`` at ``(t, eps)``; ``t`` may be a numpy array."""
    with np.errstate(all="ignore"):
        return _eval(e, t, eps)


def _eval(e, t, eps):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return t if e.name == "t" else eps
    if isinstance(e, Neg):
        return -_eval(e.arg, t, eps)
    if isinstance(e, BinOp):
        lv = _eval(e.left, t, eps)
        rv = _eval(e.right, t, eps)
        if e.op == "+":
            return lv + rv
        if e.op == "-":
            return lv - rv
        if e.op == "*":
            return lv * rv
        if np.any(np.asarray(rv) == 0):
            raise DomainError("division by zero")
        return np.divide(lv, rv)
    if isinstance(e, Pow):
        bv = _eval(e.base, t, eps)
        if e.exponent < 0:
            if np.any(np.asarray(bv) == 0):
                raise DomainError("zero raised to a negative power")
            return 1.0 / np.power(bv, -e.exponent)
        return np.power(bv, e.exponent)
    if isinstance(e, Func):
        av = _eval(e.arg, t, eps)
        if e.name == "log" and np.any(np.asarray(av) <= 0):
            raise DomainError("log of a non-positive argument")
        if e.name == "sqrt" and np.any(np.asarray(av) < 0):
            raise DomainError("sqrt of a negative argument")
        return getattr(np, e.name)(av)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------- simplifying constructors


def _num(e):
    return e.value if isinstance(e, Num) else None


def _folded(thunk):
    """Constant-fold result, or None if it would overflow (keep the node then)."""
    try:
        v = thunk()
    except (OverflowError, ZeroDivisionError):
        return None
    return Num(v) if math.isfinite(v) else None


def add(a: Expr, b: Expr) -> Expr:
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None and (r := _folded(lambda: va + vb)) is not None:
        return r
    if va == 0:
        return b
    if vb == 0:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None and (r := _folded(lambda: va - vb)) is not None:
        return r
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None and (r := _folded(lambda: va * vb)) is not None:
        return r
    if va == 0 or vb == 0:
        return ZERO
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    va, vb = _num(a), _num(b)
    if va is not None and vb is not None and vb != 0 and (r := _folded(lambda: va / vb)) is not None:
        return r
    if va == 0 and vb != 0:
        return ZERO
    if vb == 1:
        return a
    return BinOp("/", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return a
    va = _num(a)
    if va is not None and (va != 0 or k > 0) and (r := _folded(lambda: va**k)) is not None:
        return r
    return Pow(a, k)


# ------------------------------------------------------------ differentiation


def differentiate(e: Expr, var: str) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to ``var`` ("t" or "eps")."""
    if var not in VARIABLES:
        raise ValueError(f"can only differentiate with respect to {VARIABLES}, got {var!r}")
    return _diff(e, var)


def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Neg):
        return neg(_diff(e.arg, v))
    if isinstance(e, BinOp):
        u, w = e.left, e.right
        du, dw = _diff(u, v), _diff(w, v)
        if e.op == "+":
            return add(du, dw)
        if e.op == "-":
            return sub(du, dw)
        if e.op == "*":
            return add(mul(du, w), mul(u, dw))
        # (u/w)' = u'/w - u w'/w^2
        return sub(div(du, w), div(mul(u, dw), power(w, 2)))
    if isinstance(e, Pow):
        k = e.exponent
        return mul(mul(Num(float(k)), power(e.base, k - 1)), _diff(e.base, v))
    if isinstance(e, Func):
        u = e.arg
        du = _diff(u, v)
        if _num(du) == 0:
            return ZERO
        if e.name == "sin":
            outer = Func("cos", u)
        elif e.name == "cos":
            outer = neg(Func("sin", u))
        elif e.name == "exp":
            outer = e
        elif e.name == "log":
            outer = div(ONE, u)
        else:  # sqrt
            outer = div(Num(0.5), e)
        return mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")


@lru_cache(maxsize=4096)
def derivative_chain(e: Expr, var: str, order: int) -> tuple[Expr, ...]:
    """``(e, d e, ..., d^order e)`` with respect to ``var``."""
    if order < 0:
        raise ValueError("order must be non-negative")
    if order == 0:
        return (e,)
    prev = derivative_chain(e, var, order - 1)
    return prev + (differentiate(prev[-1], var),)


def jet_eval(e: Expr, t, eps: float, order: int) -> np.ndarray:
    """Values ``[e, e_t, ..., d^order e / dt^order]`` at ``(t, eps)``.

    With scalar ``t`` the result has shape ``(order + 1,)``; with an array of
    nodes it has shape ``(order + 1, len(t))``.
    """
    chain = derivative_chain(e, "t", order)
    t_arr = np.asarray(t, dtype=float)
    out = np.empty((order + 1,) + t_arr.shape)
    for k, d in enumerate(chain):
        out[k] = evaluate(d, t_arr, eps)
    return out


def free_variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return free_variables(e.arg)


# ------------------------------------------------------------ complex entries


@dataclass(frozen=True)
class ComplexExpr:
    """A complex-valued entry stored as a pair of real expressions."""

    re: Expr
    im: Expr | None = None

    @classmethod
    def parse(cls, src) -> "ComplexExpr":
        """Accept a string/number (real) or a two-element ``[re, im]`` sequence."""
        if isinstance(src, (list, tuple)):
            if len(src) != 2:
                raise ParseError("complex entry must be a [re, im] pair", 0, str(src))
            return cls(parse(_as_src(src[0])), parse(_as_src(src[1])))
        return cls(parse(_as_src(src)))

    @classmethod
    def const(cls, value: complex) -> "ComplexExpr":
        value = complex(value)
        return cls(Num(value.real), Num(value.imag) if value.imag else None)

    def jet(self, t, eps: float, order: int) -> np.ndarray:
        out = jet_eval(self.re, t, eps, order).astype(complex)
        if self.im is not None:
            out += 1j * jet_eval(self.im, t, eps, order)
        return out

    def value(self, t, eps: float):
        v = evaluate(self.re, t, eps)
        if self.im is not None:
            v = v + 1j * np.asarray(evaluate(self.im, t, eps))
        return v

    def depends_on(self, var: str) -> bool:
        names = free_variables(self.re)
        if self.im is not None:
            names |= free_variables(self.im)
        return var in names

    def __str__(self):
        if self.im is None:
            return to_string(self.re)
        return f"[{to_string(self.re)}, {to_string(self.im)}]"


def _as_src(x) -> str:
    if isinstance(x, bool):
        raise ParseError("boolean is not an expression", 0, str(x))
    if isinstance(x, (int, float)):
        return repr(float(x))
    return x


__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Pow", "Func", "ComplexExpr",
    "ParseError", "DomainError", "parse", "to_string", "evaluate",
    "differentiate", "derivative_chain", "jet_eval", "free_variables",
]
