"""Integer expression mini-language used by models, charts, and test verdicts.

Expressions are stored as prefix s-expressions, e.g. ``(> req floor)`` or
``(+ floor 1)``. Comparisons and logical operators evaluate to 0 or 1.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

UNARY_OPS = ("not", "neg")
BINARY_OPS = ("+", "-", "*", "==", "!=", "<", ">", "<=", ">=", "and", "or")

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_INT = re.compile(r"-?[0-9]+$")


class ExprSyntaxError(ValueError):
    """Raised for malformed expression text; carries the offset of the fault."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at offset {pos} in {text!r}")
        self.text = text
        self.pos = pos


class UndefinedVariable(Exception):
    """An expression read or wrote a variable that has no value."""

    def __init__(self, name: str, context: str = ""):
        suffix = f" ({context})" if context else ""
        super().__init__(f"undefined variable {name!r}{suffix}")
        self.name = name


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"


Expr = Lit | Var | Unary | Binary


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    if text[pos:].strip():
        raise ExprSyntaxError("unexpected character", text, pos)
    return tokens


def parse_expr(text: str) -> Expr:
    tokens = _tokenize(text)
    if not tokens:
        raise ExprSyntaxError("empty expression", text, 0)
    expr, rest = _parse(tokens, 0, text)
    if rest != len(tokens):
        raise ExprSyntaxError("trailing tokens", text, tokens[rest][1])
    return expr


def _parse(tokens: list[tuple[str, int]], i: int, text: str) -> tuple[Expr, int]:
    tok, pos = tokens[i]
    if tok == ")":
        raise ExprSyntaxError("unexpected ')'", text, pos)
    if tok != "(":
        return _atom(tok, text, pos), i + 1
    if i + 1 >= len(tokens):
        raise ExprSyntaxError("unterminated '('", text, pos)
    op, op_pos = tokens[i + 1]
    if op not in UNARY_OPS and op not in BINARY_OPS:
        raise ExprSyntaxError(f"unknown operator {op!r}", text, op_pos)
    args: list[Expr] = []
    i += 2
    while i < len(tokens) and tokens[i][0] != ")":
        arg, i = _parse(tokens, i, text)
        args.append(arg)
    if i >= len(tokens):
        raise ExprSyntaxError("unterminated '('", text, pos)
    i += 1  # consume ')'
    if op in UNARY_OPS:
        if len(args) != 1:
            raise ExprSyntaxError(f"{op} takes one operand", text, op_pos)
        return Unary(op, args[0]), i
    if len(args) != 2:
        raise ExprSyntaxError(f"{op} takes two operands", text, op_pos)
    return Binary(op, args[0], args[1]), i


def _atom(tok: str, text: str, pos: int) -> Expr:
    if _INT.match(tok):
        return Lit(int(tok))
    if _IDENT.match(tok):
        return Var(tok)
    raise ExprSyntaxError(f"bad atom {tok!r}", text, pos)


def to_text(expr: Expr) -> str:
    """Canonical s-expression form; parse_expr(to_text(e)) == e."""
    if isinstance(expr, Lit):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        return f"({expr.op} {to_text(expr.arg)})"
    return f"({expr.op} {to_text(expr.lhs)} {to_text(expr.rhs)})"


def to_infix(expr: Expr) -> str:
    """Human-oriented rendering for tables and reports."""
    if isinstance(expr, Lit):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        inner = to_infix(expr.arg)
        if not isinstance(expr.arg, (Lit, Var)):
            inner = f"({inner})"
        return f"!{inner}" if expr.op == "not" else f"-{inner}"
    lhs, rhs = to_infix(expr.lhs), to_infix(expr.rhs)
    if isinstance(expr.lhs, (Unary, Binary)):
        lhs = f"({lhs})"
    if isinstance(expr.rhs, (Unary, Binary)):
        rhs = f"({rhs})"
    return f"{lhs} {expr.op} {rhs}"


def variables(expr: Expr) -> frozenset[str]:
    if isinstance(expr, Lit):
        return frozenset()
    if isinstance(expr, Var):
        return frozenset((expr.name,))
    if isinstance(expr, Unary):
        return variables(expr.arg)
    return variables(expr.lhs) | variables(expr.rhs)


def evaluate(expr: Expr, valuation: dict[str, int] | None = None) -> int:
    val = valuation or {}
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        if expr.name not in val:
            raise UndefinedVariable(expr.name)
        return val[expr.name]
    if isinstance(expr, Unary):
        x = evaluate(expr.arg, val)
        return -x if expr.op == "neg" else int(x == 0)
    a = evaluate(expr.lhs, val)
    b = evaluate(expr.rhs, val)
    op = expr.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == ">":
        return int(a > b)
    if op == "<=":
        return int(a <= b)
    if op == ">=":
        return int(a >= b)
    if op == "and":
        return int(a != 0 and b != 0)
    return int(a != 0 or b != 0)
