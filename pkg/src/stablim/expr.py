"""Limit expressions: AST, parser, printer and exact evaluator.

A limit expression is a piecewise-linear nested min/max function over named
grid quantities, e.g. ``max(1000, min(-P_m + 6000, -2*P_m + 7000))``.

Nodes are frozen dataclasses, so structural equality and hashing come for
free.  Every node built through :func:`canonical` (and therefore every node
returned by :func:`parse`) has the children of ``Add``/``Min``/``Max`` in
canonical order: constants ascending, then variables by name, then composite
nodes by printed form.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

__all__ = [
    "Const", "Var", "Neg", "Add", "Mul", "Min", "Max", "LimitExpr",
    "ExprSyntaxError", "UnboundVariableError",
    "parse", "to_text", "evaluate", "canonical", "variables", "node_count",
    "depth", "height", "is_affine", "children", "substitute", "format_number", "LITERAL_LIMIT",
]

LITERAL_LIMIT = 1e15


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "LimitExpr"


@dataclass(frozen=True)
class Add:
    children: tuple


@dataclass(frozen=True)
class Mul:
    scalar: float
    child: "LimitExpr"


@dataclass(frozen=True)
class Min:
    children: tuple


@dataclass(frozen=True)
class Max:
    children: tuple


LimitExpr = Union[Const, Var, Neg, Add, Mul, Min, Max]


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class UnboundVariableError(KeyError):
    pass


# ---------------------------------------------------------------------------
# printing and canonical order


def format_number(value: float) -> str:
    value = float(value)
    if value == 0.0:
        return "0"
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _sort_key(e: LimitExpr):
    if isinstance(e, Const):
        return (0, e.value, "")
    if isinstance(e, Var):
        return (1, 0.0, e.name)
    return (2, 0.0, to_text(e))


def _atom(e: LimitExpr) -> str:
    """Text of ``e`` safe to place after a unary minus or a ``*``."""
    if isinstance(e, (Var, Min, Max)):
        return to_text(e)
    if isinstance(e, Const) and e.value >= 0:
        return to_text(e)
    return "(" + to_text(e) + ")"


def _add_tail(e: LimitExpr) -> str:
    # A term after the first one in a sum.  Negative constants, negative
    # scaled terms and negations print with a binary minus; the parser folds
    # them back into the same node.
    if isinstance(e, Const) and e.value < 0:
        return " - " + format_number(-e.value)
    if isinstance(e, Mul) and e.scalar < 0 and not isinstance(e.child, Const):
        return " - " + _mul_text(-e.scalar, e.child)
    if isinstance(e, Neg) and not isinstance(e.child, (Const, Mul)):
        return " - " + _atom(e.child)
    return " + " + _add_item(e)


def _add_item(e: LimitExpr) -> str:
    if isinstance(e, Add):
        return "(" + to_text(e) + ")"
    return to_text(e)


def _mul_text(scalar: float, child: LimitExpr) -> str:
    return format_number(scalar) + "*" + _atom(child)


def to_text(e: LimitExpr) -> str:
    """Canonical text of ``e``; children are emitted in canonical order."""
    if isinstance(e, Const):
        return format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return "-" + _atom(e.child)
    if isinstance(e, Mul):
        return _mul_text(e.scalar, e.child)
    if isinstance(e, Add):
        kids = sorted(e.children, key=_sort_key)
        return _add_item(kids[0]) + "".join(_add_tail(k) for k in kids[1:])
    if isinstance(e, (Min, Max)):
        fn = "min" if isinstance(e, Min) else "max"
        kids = sorted(e.children, key=_sort_key)
        return fn + "(" + ", ".join(to_text(k) for k in kids) + ")"
    raise TypeError(f"not a limit expression: {e!r}")


# ---------------------------------------------------------------------------
# smart constructors (the parser's folding rules)


def _neg(child: LimitExpr) -> LimitExpr:
    if isinstance(child, Const):
        return Const(-child.value + 0.0)
    if isinstance(child, Mul):
        return _mul(-child.scalar, child.child)
    return Neg(child)


def _mul(scalar: float, child: LimitExpr) -> LimitExpr:
    scalar = float(scalar) + 0.0
    if not math.isfinite(scalar):
        raise ValueError("non-finite scalar in product")
    if isinstance(child, Const):
        value = scalar * child.value + 0.0
        if not math.isfinite(value):
            raise ValueError("non-finite constant in product")
        return Const(value)
    return Mul(scalar, child)


def _nary(cls, children) -> LimitExpr:
    kids = tuple(sorted(children, key=_sort_key))
    if len(kids) == 1:
        return kids[0]
    return cls(kids)


def canonical(e: LimitExpr) -> LimitExpr:
    """Rebuild ``e`` through the parser's constructors.

    ``parse(to_text(e)) == canonical(e)`` holds for every expression.
    """
    if isinstance(e, Const):
        if not math.isfinite(e.value):
            raise ValueError("non-finite constant")
        return Const(float(e.value) + 0.0)
    if isinstance(e, Var):
        return e
    if isinstance(e, Neg):
        return _neg(canonical(e.child))
    if isinstance(e, Mul):
        return _mul(e.scalar, canonical(e.child))
    if isinstance(e, (Add, Min, Max)):
        kids = [canonical(k) for k in e.children]
        if not kids:
            raise ValueError(f"empty {type(e).__name__}")
        return _nary(type(e), kids)
    raise TypeError(f"not a limit expression: {e!r}")


# ---------------------------------------------------------------------------
# lexer and parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\[[A-Za-z0-9_]+\])?)
  | (?P<op>[-+*/(),])
    """,
    re.VERBOSE,
)

_FUNCTIONS = {"min": Min, "max": Max}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None) -> ExprSyntaxError:
        tok = tok or self.tok
        return ExprSyntaxError(message, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> LimitExpr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> LimitExpr:
        terms = [self.term()]
        while True:
            if self.accept("+"):
                terms.append(self.term())
            elif self.accept("-"):
                terms.append(_neg(self.term()))
            else:
                break
        if len(terms) == 1:
            return terms[0]
        return _nary(Add, terms)

    def term(self) -> LimitExpr:
        left = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op_tok = self.tok
            self.i += 1
            right = self.factor()
            try:
                if op_tok.text == "/":
                    if not isinstance(right, Const):
                        raise self.error("division by a non-constant", op_tok)
                    if right.value == 0.0:
                        raise self.error("division by zero", op_tok)
                    left = _mul(1.0 / right.value, left)
                elif isinstance(left, Const):
                    left = _mul(left.value, right)
                elif isinstance(right, Const):
                    left = _mul(right.value, left)
                else:
                    raise self.error("product of two non-constant terms", op_tok)
            except ValueError as exc:
                if isinstance(exc, ExprSyntaxError):
                    raise
                raise self.error(str(exc), op_tok) from None
        return left

    def factor(self) -> LimitExpr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            value = float(tok.text)
            if not math.isfinite(value) or abs(value) > LITERAL_LIMIT:
                raise self.error(f"literal {tok.text} outside +/-{LITERAL_LIMIT:g}", tok)
            return Const(value)
        if tok.kind == "ident":
            self.i += 1
            if self.tok.kind == "op" and self.tok.text == "(":
                fn = _FUNCTIONS.get(tok.text)
                if fn is None:
                    raise self.error(f"unknown function {tok.text!r}", tok)
                self.i += 1
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                return _nary(fn, args)
            if tok.text in _FUNCTIONS:
                raise self.error(f"{tok.text!r} must be called with arguments", tok)
            return Var(tok.text)
        if self.accept("-"):
            return _neg(self.factor())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}", tok)


def parse(text: str) -> LimitExpr:
    """Parse limit-expression text into a canonical AST.

    Raises :class:`ExprSyntaxError` (with line and column) on malformed
    input, unknown functions, non-linear products and out-of-range literals.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# evaluation and small queries


def evaluate(e: LimitExpr, binding: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(binding[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.child, binding)
    if isinstance(e, Mul):
        return e.scalar * evaluate(e.child, binding)
    if isinstance(e, Add):
        return math.fsum(evaluate(k, binding) for k in e.children)
    if isinstance(e, Min):
        return min(evaluate(k, binding) for k in e.children)
    if isinstance(e, Max):
        return max(evaluate(k, binding) for k in e.children)
    raise TypeError(f"not a limit expression: {e!r}")


def children(e: LimitExpr) -> tuple:
    if isinstance(e, (Neg, Mul)):
        return (e.child,)
    if isinstance(e, (Add, Min, Max)):
        return e.children
    return ()


def variables(e: LimitExpr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    out: set[str] = set()
    for k in children(e):
        out |= variables(k)
    return out


def node_count(e: LimitExpr) -> int:
    return 1 + sum(node_count(k) for k in children(e))


def depth(e: LimitExpr) -> int:
    kids = children(e)
    return 1 + (max(depth(k) for k in kids) if kids else 0)


def is_affine(e: LimitExpr) -> bool:
    if isinstance(e, (Min, Max)):
        return False
    return all(is_affine(k) for k in children(e))


def height(e: LimitExpr) -> int:
    """Edges on the longest root-to-leaf path, affine subtrees counted as leaves."""
    if is_affine(e):
        return 0
    return 1 + max(height(k) for k in children(e))


def substitute(e: LimitExpr, mapping: Mapping[str, LimitExpr]) -> LimitExpr:
    """Replace variables by expressions; untouched nodes are kept as is."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.child, mapping))
    if isinstance(e, Mul):
        return Mul(e.scalar, substitute(e.child, mapping))
    return type(e)(tuple(substitute(k, mapping) for k in e.children))
