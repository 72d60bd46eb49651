"""Small arithmetic expression evaluator.

Supports +, -, *, /, ** with parentheses, unary sign, numeric literals, and
snake_case variables bound through an environment. Operator precedence and
associativity follow the usual conventions (** binds right and tighter than
unary minus on its left, so -2**2 evaluates to -4).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[a-z][a-z0-9_]*)"
    r"|(?P<op>\*\*|[()+\-*/]))"
)


class ExpressionError(ValueError):
    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str


def tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ExpressionError(
                "bad-token", f"cannot read expression at {text[pos:pos + 10]!r}"
            )
        pos = m.end()
        for kind in ("number", "name", "op"):
            lexeme = m.group(kind)
            if lexeme is not None:
                tokens.append(_Token(kind, lexeme))
                break
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], env: dict[str, float]):
        self.tokens = tokens
        self.pos = 0
        self.env = env

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("bad-expression", "unexpected end of expression")
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.take()
        if tok.kind != "op" or tok.text != text:
            raise ExpressionError("bad-expression", f"expected {text!r}, got {tok.text!r}")

    def parse(self) -> float:
        value = self.sum_expr()
        if self.peek() is not None:
            raise ExpressionError(
                "bad-expression", f"trailing input at {self.peek().text!r}"
            )
        return value

    def sum_expr(self) -> float:
        value = self.term()
        while (tok := self.peek()) and tok.kind == "op" and tok.text in "+-":
            self.take()
            rhs = self.term()
            value = value + rhs if tok.text == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.signed()
        while (tok := self.peek()) and tok.kind == "op" and tok.text in "*/":
            self.take()
            rhs = self.signed()
            if tok.text == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise ExpressionError("division-by-zero", "division by zero")
                value = value / rhs
        return value

    def signed(self) -> float:
        signs = 0
        while (tok := self.peek()) and tok.kind == "op" and tok.text in "+-":
            self.take()
            if tok.text == "-":
                signs += 1
        value = self.power()
        return -value if signs % 2 else value

    def power(self) -> float:
        base = self.atom()
        tok = self.peek()
        if tok and tok.kind == "op" and tok.text == "**":
            self.take()
            exponent = self.signed()
            try:
                result = base**exponent
            except (OverflowError, ZeroDivisionError) as exc:
                raise ExpressionError("domain-error", f"power failed: {exc}") from None
            if isinstance(result, complex):
                raise ExpressionError("domain-error", "complex result from power")
            return result
        return base

    def atom(self) -> float:
        tok = self.take()
        if tok.kind == "number":
            return float(tok.text)
        if tok.kind == "name":
            if tok.text not in self.env:
                raise ExpressionError(
                    "unbound-variable", f"variable {tok.text!r} is not bound"
                )
            return float(self.env[tok.text])
        if tok.kind == "op" and tok.text == "(":
            value = self.sum_expr()
            self.expect_op(")")
            return value
        raise ExpressionError("bad-expression", f"unexpected token {tok.text!r}")


def evaluate(expression: str, env: dict[str, float] | None = None) -> float:
    """Evaluate an arithmetic expression against bound numeric variables."""
    tokens = tokenize(expression)
    if not tokens:
        raise ExpressionError("bad-expression", "empty expression")
    value = _Parser(tokens, env or {}).parse()
    if not math.isfinite(value):
        raise ExpressionError("domain-error", f"non-finite result {value!r}")
    return value


def variables_in(expression: str) -> frozenset[str]:
    return frozenset(t.text for t in tokenize(expression) if t.kind == "name")
