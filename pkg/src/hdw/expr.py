"""Minimal symbolic expression engine.

Expression trees over named real variables with exact differentiation,
basic simplification, scalar and vectorized (numpy) evaluation, and a
recursive-descent parser for the textual grammar:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | base ('^' intlit)?
    base   := number | ident | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'ln' | 'sqrt'

Whitespace is insignificant.  Exponents are restricted to constant
integers so differentiation stays closed-form.  Expressions are
immutable and hashable; printing then re-parsing yields an
evaluation-equivalent tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

Binding = Mapping[str, float]
Number = Union[int, float]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class ExprError(Exception):
    """Base class for expression-engine errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...]):
        super().__init__(f"{message} at offset {offset} (expected {', '.join(expected)})")
        self.offset = offset
        self.expected = expected


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


class DomainError(ExprError):
    pass


def _coerce(value) -> "Expression":
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float)):
        return Const(float(value))
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


class Expression:
    """Immutable expression-tree node."""

    __slots__ = ()

    def eval(self, binding: Binding) -> float:
        raise NotImplementedError

    def eval_many(self, binding: Mapping[str, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def diff(self, var: str) -> "Expression":
        """Exact derivative with respect to ``var``, simplified."""
        return simplify(self._diff(var))

    def _diff(self, var: str) -> "Expression":
        raise NotImplementedError

    def variables(self) -> frozenset[str]:
        raise NotImplementedError

    def substitute(self, mapping: Mapping[str, "Expression | float"]) -> "Expression":
        raise NotImplementedError

    def _prec(self) -> int:
        raise NotImplementedError

    def _to_str(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self._to_str()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self._to_str()!r})"

    # Operator sugar; coerces plain numbers to constants.
    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, exponent: int):
        if not isinstance(exponent, int):
            raise TypeError("exponent must be a constant integer")
        return Pow(self, exponent)

    def __neg__(self):
        return Neg(self)


def _paren(child: Expression, minimum: int) -> str:
    s = child._to_str()
    return f"({s})" if child._prec() < minimum else s


_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True, slots=True, repr=False)
class Const(Expression):
    value: float

    def eval(self, binding):
        return self.value

    def eval_many(self, binding):
        return np.float64(self.value)

    def _diff(self, var):
        return Const(0.0)

    def variables(self):
        return frozenset()

    def substitute(self, mapping):
        return self

    def _prec(self):
        return _UNARY if self.value < 0 else _ATOM

    def _to_str(self):
        if self.value == int(self.value) and abs(self.value) < 1e16:
            return str(int(self.value))
        return repr(self.value)


@dataclass(frozen=True, slots=True, repr=False)
class Var(Expression):
    name: str

    def eval(self, binding):
        try:
            return float(binding[self.name])
        except KeyError:
            raise UnboundVariableError(self.name) from None

    def eval_many(self, binding):
        try:
            return np.asarray(binding[self.name], dtype=float)
        except KeyError:
            raise UnboundVariableError(self.name) from None

    def _diff(self, var):
        return Const(1.0 if var == self.name else 0.0)

    def variables(self):
        return frozenset((self.name,))

    def substitute(self, mapping):
        if self.name in mapping:
            return _coerce(mapping[self.name])
        return self

    def _prec(self):
        return _ATOM

    def _to_str(self):
        return self.name


@dataclass(frozen=True, slots=True, repr=False)
class Neg(Expression):
    arg: Expression

    def eval(self, binding):
        return -self.arg.eval(binding)

    def eval_many(self, binding):
        return -self.arg.eval_many(binding)

    def _diff(self, var):
        return Neg(self.arg._diff(var))

    def variables(self):
        return self.arg.variables()

    def substitute(self, mapping):
        return Neg(self.arg.substitute(mapping))

    def _prec(self):
        return _UNARY

    def _to_str(self):
        return "-" + _paren(self.arg, _UNARY)


@dataclass(frozen=True, slots=True, repr=False)
class Add(Expression):
    left: Expression
    right: Expression

    def eval(self, binding):
        return self.left.eval(binding) + self.right.eval(binding)

    def eval_many(self, binding):
        return self.left.eval_many(binding) + self.right.eval_many(binding)

    def _diff(self, var):
        return Add(self.left._diff(var), self.right._diff(var))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def substitute(self, mapping):
        return Add(self.left.substitute(mapping), self.right.substitute(mapping))

    def _prec(self):
        return _ADD

    def _to_str(self):
        return f"{_paren(self.left, _ADD)} + {_paren(self.right, _ADD)}"


@dataclass(frozen=True, slots=True, repr=False)
class Sub(Expression):
    left: Expression
    right: Expression

    def eval(self, binding):
        return self.left.eval(binding) - self.right.eval(binding)

    def eval_many(self, binding):
        return self.left.eval_many(binding) - self.right.eval_many(binding)

    def _diff(self, var):
        return Sub(self.left._diff(var), self.right._diff(var))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def substitute(self, mapping):
        return Sub(self.left.substitute(mapping), self.right.substitute(mapping))

    def _prec(self):
        return _ADD

    def _to_str(self):
        return f"{_paren(self.left, _ADD)} - {_paren(self.right, _ADD + 1)}"


@dataclass(frozen=True, slots=True, repr=False)
class Mul(Expression):
    left: Expression
    right: Expression

    def eval(self, binding):
        return self.left.eval(binding) * self.right.eval(binding)

    def eval_many(self, binding):
        return self.left.eval_many(binding) * self.right.eval_many(binding)

    def _diff(self, var):
        return Add(Mul(self.left._diff(var), self.right), Mul(self.left, self.right._diff(var)))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def substitute(self, mapping):
        return Mul(self.left.substitute(mapping), self.right.substitute(mapping))

    def _prec(self):
        return _MUL

    def _to_str(self):
        return f"{_paren(self.left, _MUL)}*{_paren(self.right, _MUL + 1)}"


@dataclass(frozen=True, slots=True, repr=False)
class Div(Expression):
    left: Expression
    right: Expression

    def eval(self, binding):
        den = self.right.eval(binding)
        if den == 0.0:
            raise DomainError("division by zero")
        return self.left.eval(binding) / den

    def eval_many(self, binding):
        den = self.right.eval_many(binding)
        if np.any(den == 0.0):
            raise DomainError("division by zero")
        return self.left.eval_many(binding) / den

    def _diff(self, var):
        num = Sub(Mul(self.left._diff(var), self.right), Mul(self.left, self.right._diff(var)))
        return Div(num, Pow(self.right, 2))

    def variables(self):
        return self.left.variables() | self.right.variables()

    def substitute(self, mapping):
        return Div(self.left.substitute(mapping), self.right.substitute(mapping))

    def _prec(self):
        return _MUL

    def _to_str(self):
        return f"{_paren(self.left, _MUL)}/{_paren(self.right, _MUL + 1)}"


@dataclass(frozen=True, slots=True, repr=False)
class Pow(Expression):
    base: Expression
    exponent: int

    def eval(self, binding):
        b = self.base.eval(binding)
        if b == 0.0 and self.exponent <= 0:
            raise DomainError(f"0^{self.exponent} is undefined")
        return b ** self.exponent

    def eval_many(self, binding):
        b = self.base.eval_many(binding)
        if self.exponent <= 0 and np.any(b == 0.0):
            raise DomainError(f"0^{self.exponent} is undefined")
        return b ** float(self.exponent)

    def _diff(self, var):
        if self.exponent == 0:
            return Const(0.0)
        return Mul(Mul(Const(float(self.exponent)), Pow(self.base, self.exponent - 1)),
                   self.base._diff(var))

    def variables(self):
        return self.base.variables()

    def substitute(self, mapping):
        return Pow(self.base.substitute(mapping), self.exponent)

    def _prec(self):
        return _POW

    def _to_str(self):
        return f"{_paren(self.base, _ATOM)}^{self.exponent}"


_FUNC_EVAL = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
}


@dataclass(frozen=True, slots=True, repr=False)
class Func(Expression):
    name: str
    arg: Expression

    def eval(self, binding):
        x = self.arg.eval(binding)
        if self.name == "ln":
            if x <= 0.0:
                raise DomainError(f"ln of non-positive value {x}")
            return math.log(x)
        if self.name == "sqrt":
            if x < 0.0:
                raise DomainError(f"sqrt of negative value {x}")
            return math.sqrt(x)
        return _FUNC_EVAL[self.name](x)

    def eval_many(self, binding):
        x = self.arg.eval_many(binding)
        if self.name == "ln":
            if np.any(x <= 0.0):
                raise DomainError("ln of non-positive value")
            return np.log(x)
        if self.name == "sqrt":
            if np.any(x < 0.0):
                raise DomainError("sqrt of negative value")
            return np.sqrt(x)
        return getattr(np, self.name)(x)

    def _diff(self, var):
        da = self.arg._diff(var)
        if self.name == "sin":
            outer: Expression = Func("cos", self.arg)
        elif self.name == "cos":
            outer = Neg(Func("sin", self.arg))
        elif self.name == "exp":
            outer = self
        elif self.name == "ln":
            outer = Div(Const(1.0), self.arg)
        else:  # sqrt
            outer = Div(Const(1.0), Mul(Const(2.0), self))
        return Mul(outer, da)

    def variables(self):
        return self.arg.variables()

    def substitute(self, mapping):
        return Func(self.name, self.arg.substitute(mapping))

    def _prec(self):
        return _ATOM

    def _to_str(self):
        return f"{self.name}({self.arg._to_str()})"


# ---------------------------------------------------------------------------
# Simplification


def _const_value(e: Expression):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        return -e.arg.value
    return None


def simplify(e: Expression) -> Expression:
    """Constant folding and identity elimination.

    Never changes evaluation results at bindings where both the input and
    the output are defined.
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        v = _const_value(a)
        if v is not None:
            return Const(-v)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Func):
        a = simplify(e.arg)
        v = _const_value(a)
        if v is not None:
            try:
                return Const(Func(e.name, Const(v)).eval({}))
            except DomainError:
                pass
        return Func(e.name, a)
    if isinstance(e, Pow):
        b = simplify(e.base)
        if e.exponent == 0:
            return Const(1.0)
        if e.exponent == 1:
            return b
        v = _const_value(b)
        if v is not None and not (v == 0.0 and e.exponent < 0):
            return Const(v ** e.exponent)
        return Pow(b, e.exponent)

    left = simplify(e.left)  # type: ignore[union-attr]
    right = simplify(e.right)  # type: ignore[union-attr]
    lv, rv = _const_value(left), _const_value(right)

    if isinstance(e, Add):
        if lv is not None and rv is not None:
            return Const(lv + rv)
        if lv == 0.0:
            return right
        if rv == 0.0:
            return left
        if isinstance(right, Neg) and left == right.arg:
            return Const(0.0)
        if isinstance(left, Neg) and left.arg == right:
            return Const(0.0)
        return Add(left, right)
    if isinstance(e, Sub):
        if lv is not None and rv is not None:
            return Const(lv - rv)
        if rv == 0.0:
            return left
        if lv == 0.0:
            return simplify(Neg(right))
        if left == right:
            return Const(0.0)
        return Sub(left, right)
    if isinstance(e, Mul):
        if lv is not None and rv is not None:
            return Const(lv * rv)
        if lv == 0.0 or rv == 0.0:
            return Const(0.0)
        if lv == 1.0:
            return right
        if rv == 1.0:
            return left
        if lv == -1.0:
            return simplify(Neg(right))
        if rv == -1.0:
            return simplify(Neg(left))
        # canonical order for the commutative product, so that equal
        # products built in either order cancel structurally
        if not isinstance(left, Const) and str(left) > str(right):
            left, right = right, left
        # hoist nested constant factors: a*(b*x) and (b*x)*a fold to (ab)*x
        if isinstance(left, Const) and isinstance(right, Mul) \
                and isinstance(right.left, Const):
            return simplify(Mul(Const(left.value * right.left.value), right.right))
        if isinstance(right, Const) and isinstance(left, Mul) \
                and isinstance(left.left, Const):
            return simplify(Mul(Const(left.left.value * right.value), left.right))
        return Mul(left, right)
    if isinstance(e, Div):
        if rv == 0.0:
            raise DomainError("division by constant zero")
        if lv is not None and rv is not None:
            return Const(lv / rv)
        if lv == 0.0:
            return Const(0.0)
        if rv == 1.0:
            return left
        if rv is not None and isinstance(left, Mul) and isinstance(left.left, Const):
            return simplify(Mul(Const(left.left.value / rv), left.right))
        return Div(left, right)
    raise TypeError(f"unknown node {type(e).__name__}")


def add_all(terms) -> Expression:
    """Sum of expressions; Const(0) for an empty sequence."""
    result: Expression = Const(0.0)
    for t in terms:
        result = Add(result, _coerce(t))
    return simplify(result)


# ---------------------------------------------------------------------------
# Parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<symbol>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            offset = len(text) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", offset,
                             ("number", "identifier", "operator"))
        if m.lastgroup == "number":
            tokens.append(("number", m.group("number"), m.start("number")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            sym = m.group("symbol")
            tokens.append((sym, sym, m.start("symbol")))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, expected: tuple[str, ...]):
        kind, value, offset = self.peek()
        shown = "end of input" if kind == "eof" else repr(value)
        raise ParseError(f"unexpected {shown}", offset, expected)

    def parse(self) -> Expression:
        e = self.expr()
        if self.peek()[0] != "eof":
            self.error(("'+'", "'-'", "'*'", "'/'", "'^'", "end of input"))
        return e

    def expr(self) -> Expression:
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expression:
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expression:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.factor())
        e = self.base()
        if self.peek()[0] == "^":
            self.advance()
            e = Pow(e, self.intlit())
        return e

    def intlit(self) -> int:
        sign = 1
        if self.peek()[0] == "-":
            self.advance()
            sign = -1
        kind, value, offset = self.peek()
        if kind != "number" or any(c in value for c in ".eE"):
            self.error(("integer literal",))
        self.advance()
        return sign * int(value)

    def base(self) -> Expression:
        kind, value, offset = self.peek()
        if kind == "number":
            self.advance()
            return Const(float(value))
        if kind == "ident":
            self.advance()
            if value in FUNCTIONS:
                if self.peek()[0] != "(":
                    self.error(("'('",))
                self.advance()
                arg = self.expr()
                if self.peek()[0] != ")":
                    self.error(("')'",))
                self.advance()
                return Func(value, arg)
            return Var(value)
        if kind == "(":
            self.advance()
            e = self.expr()
            if self.peek()[0] != ")":
                self.error(("')'",))
            self.advance()
            return e
        self.error(("number", "identifier", "'('", "'-'"))
        raise AssertionError("unreachable")


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` with the byte offset and expected-token set
    on malformed input.
    """
    return _Parser(text).parse()
