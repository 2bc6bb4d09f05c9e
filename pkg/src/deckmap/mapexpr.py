"""Parser for rational-map expressions over Q(i).

Grammar (precedence low to high):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' INT)*          (right associative, exponent >= 0)
    atom   := NUMBER | 'i' | NAME | '(' expr ')'

A NUMBER starting with a digit greedily matches INT [/ INT] [i], so '3/2'
and '3/2i' are single exact literals ((3/2) and (3/2)*i); a '/' in any
other position is the division operator.  'i' alone is the imaginary unit;
'z' is the dynamical variable; any other name is a parameter that must be
bound at evaluation time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .algebra import ComplexPoly, GaussianRational, gr, poly_gcd
from .errors import ParseError
from .ratmap import RationalMap

_TOKEN_RE = re.compile(
    r"""
    (?P<num>\d+(?:/\d+)?i?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
  | (?P<ws>\s+)
  | (?P<bad>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | name | op | end
    text: str
    pos: int


def _tokenize(src: str) -> list[Token]:
    out = []
    for m in _TOKEN_RE.finditer(src):
        kind = m.lastgroup
        if kind == "ws":
            continue
        if kind == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", m.start())
        out.append(Token(kind, m.group(), m.start()))
    out.append(Token("end", "", len(src)))
    return out


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: GaussianRational
    pos: int


@dataclass(frozen=True)
class Var:
    pos: int


@dataclass(frozen=True)
class Param:
    name: str
    pos: int


@dataclass(frozen=True)
class Neg:
    arg: object
    pos: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    pos: int


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    pos: int


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.idx = 0

    def peek(self) -> Token:
        return self.tokens[self.idx]

    def advance(self) -> Token:
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect_op(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}", tok.pos)
        return self.advance()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance()
            node = BinOp(op.text, node, self.term(), op.pos)
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance()
            node = BinOp(op.text, node, self.unary(), op.pos)
        return node

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary(), tok.pos)
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            caret = self.advance()
            node = Pow(node, self.exponent(), caret.pos)
        return node

    def exponent(self) -> int:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            raise ParseError("exponent must be a nonnegative integer", tok.pos)
        if tok.kind != "num" or not tok.text.isdigit():
            raise ParseError("exponent must be a nonnegative integer literal", tok.pos)
        self.advance()
        base = int(tok.text)
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return base ** self.exponent()
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Lit(_literal_value(tok.text), tok.pos)
        if tok.kind == "name":
            self.advance()
            if tok.text == "z":
                return Var(tok.pos)
            if tok.text == "i":
                return Lit(gr(0, 1), tok.pos)
            return Param(tok.text, tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)


def _literal_value(text: str) -> GaussianRational:
    imag = text.endswith("i")
    if imag:
        text = text[:-1]
    value = Fraction(text) if "/" in text else Fraction(int(text))
    return gr(0, value) if imag else gr(value)


def parse_expression(src: str):
    """Parse to an AST without evaluating (parameters stay symbolic)."""
    return _Parser(_tokenize(src)).parse()


# -- evaluation to a rational map ---------------------------------------------


class _RF:
    """A rational function num/den during evaluation (kept reduced)."""

    __slots__ = ("num", "den")

    def __init__(self, num: ComplexPoly, den: ComplexPoly, pos: int = 0):
        if den.is_zero():
            raise ParseError("division by the zero function", pos)
        g = poly_gcd(num, den) if not num.is_zero() else ComplexPoly.one()
        if g.degree > 0:
            num = num.exact_div(g)
            den = den.exact_div(g)
        self.num = num
        self.den = den

    @staticmethod
    def const(c: GaussianRational) -> "_RF":
        return _RF(ComplexPoly.constant(c), ComplexPoly.one())

    @staticmethod
    def variable() -> "_RF":
        return _RF(ComplexPoly.variable(), ComplexPoly.one())

    def add(self, o: "_RF", pos: int) -> "_RF":
        return _RF(self.num * o.den + o.num * self.den, self.den * o.den, pos)

    def sub(self, o: "_RF", pos: int) -> "_RF":
        return _RF(self.num * o.den - o.num * self.den, self.den * o.den, pos)

    def mul(self, o: "_RF", pos: int) -> "_RF":
        return _RF(self.num * o.num, self.den * o.den, pos)

    def div(self, o: "_RF", pos: int) -> "_RF":
        if o.num.is_zero():
            raise ParseError("division by zero", pos)
        return _RF(self.num * o.den, self.den * o.num, pos)

    def neg(self) -> "_RF":
        return _RF(-self.num, self.den)

    def pow(self, n: int, pos: int) -> "_RF":
        return _RF(self.num.pow(n), self.den.pow(n), pos)


def _eval(node, params: dict[str, GaussianRational]) -> _RF:
    if isinstance(node, Lit):
        return _RF.const(node.value)
    if isinstance(node, Var):
        return _RF.variable()
    if isinstance(node, Param):
        if node.name not in params:
            raise ParseError(f"unbound parameter {node.name!r}", node.pos)
        return _RF.const(params[node.name])
    if isinstance(node, Neg):
        return _eval(node.arg, params).neg()
    if isinstance(node, Pow):
        return _eval(node.base, params).pow(node.exponent, node.pos)
    if isinstance(node, BinOp):
        left = _eval(node.left, params)
        right = _eval(node.right, params)
        if node.op == "+":
            return left.add(right, node.pos)
        if node.op == "-":
            return left.sub(right, node.pos)
        if node.op == "*":
            return left.mul(right, node.pos)
        return left.div(right, node.pos)
    raise ParseError("internal: unknown AST node", 0)


def parse_map(src: str, params: dict[str, GaussianRational] | None = None) -> RationalMap:
    """Parse and evaluate to an exact RationalMap in canonical form."""
    rf = _eval(parse_expression(src), params or {})
    if rf.num.is_zero() and rf.den.is_zero():
        raise ParseError("expression reduces to 0/0", 0)
    return RationalMap(rf.num, rf.den)


def parse_constant(src: str, params: dict[str, GaussianRational] | None = None) -> GaussianRational:
    """Parse an expression that must reduce to a Gaussian rational."""
    rf = _eval(parse_expression(src), params or {})
    if rf.num.degree > 0 or rf.den.degree > 0:
        raise ParseError("expected a constant expression", 0)
    if rf.num.is_zero():
        return gr(0)
    return rf.num.coeff(0) / rf.den.coeff(0)


# -- canonical printing --------------------------------------------------------


def format_coefficient(c: GaussianRational) -> str:
    """Exact coefficient in a form the parser reads back."""
    return str(c)


def _format_poly(p: ComplexPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for k in range(int(p.degree), -1, -1):
        c = p.coeff(k)
        if c.is_zero():
            continue
        if k == 0:
            parts.append(f"({c})")
        elif k == 1:
            parts.append(f"({c})*z")
        else:
            parts.append(f"({c})*z^{k}")
    return "+".join(parts)


def format_map(f: RationalMap) -> str:
    """Canonical parseable text for a map; parsing it back gives f again."""
    return f"({_format_poly(f.num)})/({_format_poly(f.den)})"
