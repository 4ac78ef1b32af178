"""Condition expressions: the small language that guards constraints.

Grammar (whitespace-insensitive, keywords lowercase)::

    expr       := or
    or         := and ("or" and)*
    and        := not ("and" not)*
    not        := "not" not | atom
    atom       := comparison | "(" expr ")"
    comparison := operand (cmpop operand)?
    cmpop      := "=" | "!=" | "<" | "<=" | ">" | ">="
    operand    := "$" ident | literal

Literals are double-quoted strings (with ``\\"`` and ``\\\\`` escapes),
optionally-signed integers, or calendar dates written ``YYYY-MM-DD``.
Identifiers match ``[A-Za-z_][A-Za-z0-9_.-]*`` and include the reserved
built-ins (``Party1.Name``, ``Party1.Address``, ``Party2.Name``,
``Party2.Address``, ``Date``).

Evaluation is strong-Kleene three-valued: a comparison over an unbound
reference is *unknown*, ``and``/``or``/``not`` propagate unknowns in the
usual Kleene fashion, and a comparison between mismatched value kinds
(say an integer against a string) raises :class:`KindMismatch` rather
than going silently unknown — that situation is a template-authoring bug.

A bare operand used as a boolean atom (the grammar allows it) is truthy
when it is a non-zero integer, a non-empty string, or any bound date;
unbound references are unknown as usual.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Union

from .errors import KindMismatch, ParseError

Value = Union[str, int, dt.date]

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")

RESERVED_REFS = (
    "Party1.Name",
    "Party1.Address",
    "Party2.Name",
    "Party2.Address",
    "Date",
)


class Tri(Enum):
    """Three-valued logic result."""

    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    def __bool__(self):  # pragma: no cover - guard against accidental truth tests
        raise TypeError("Tri is not a boolean; compare against Tri members")


# ---------------------------------------------------------------------------
# Expression tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Lit:
    value: Value


@dataclass(frozen=True)
class Compare:
    op: str  # one of = != < <= > >=
    left: Union[Ref, Lit]
    right: Union[Ref, Lit]


@dataclass(frozen=True)
class Not:
    inner: "CondExpr"


@dataclass(frozen=True)
class And:
    parts: tuple["CondExpr", ...]


@dataclass(frozen=True)
class Or:
    parts: tuple["CondExpr", ...]


CondExpr = Union[Ref, Lit, Compare, Not, And, Or]

_CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<date>\d{4}-\d{2}-\d{2})
  | (?P<int>-?\d+)
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<ref>\$[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<word>[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(pos, f"unexpected character {src[pos]!r}")
        kind = m.lastgroup
        assert kind is not None
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(src)))
    return tokens


def _unquote(text: str, pos: int) -> str:
    body = text[1:-1]
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            if i + 1 >= len(body) or body[i + 1] not in ('"', "\\"):
                raise ParseError(pos + 1 + i, "bad escape in string literal")
            out.append(body[i + 1])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


# ---------------------------------------------------------------------------
# Parser (recursive descent, flattening n-ary and/or)
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.cur
        self.i += 1
        return tok

    def fail(self, message: str):
        tok = self.cur
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(tok.pos, f"{message}, found {where}")

    def parse(self) -> CondExpr:
        expr = self.parse_or()
        if self.cur.kind != "eof":
            self.fail("unexpected trailing input")
        return expr

    def parse_or(self) -> CondExpr:
        parts = [self.parse_and()]
        while self.cur.kind == "word" and self.cur.text == "or":
            self.advance()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and(self) -> CondExpr:
        parts = [self.parse_not()]
        while self.cur.kind == "word" and self.cur.text == "and":
            self.advance()
            parts.append(self.parse_not())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_not(self) -> CondExpr:
        if self.cur.kind == "word" and self.cur.text == "not":
            self.advance()
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> CondExpr:
        if self.cur.kind == "lparen":
            self.advance()
            inner = self.parse_or()
            if self.cur.kind != "rparen":
                self.fail("expected ')'")
            self.advance()
            return inner
        left = self.parse_operand()
        if self.cur.kind == "op":
            op = self.advance().text
            right = self.parse_operand()
            return Compare(op, left, right)
        return left

    def parse_operand(self) -> Union[Ref, Lit]:
        tok = self.cur
        if tok.kind == "ref":
            self.advance()
            return Ref(tok.text[1:])
        if tok.kind == "int":
            self.advance()
            return Lit(int(tok.text))
        if tok.kind == "date":
            self.advance()
            try:
                y, m, d = (int(part) for part in tok.text.split("-"))
                return Lit(dt.date(y, m, d))
            except ValueError:
                raise ParseError(tok.pos, f"invalid date {tok.text!r}") from None
        if tok.kind == "string":
            self.advance()
            return Lit(_unquote(tok.text, tok.pos))
        if tok.kind == "word" and tok.text in ("and", "or", "not"):
            self.fail("expected operand")
        if tok.kind == "word":
            raise ParseError(tok.pos, f"bare word {tok.text!r}; references start with '$'")
        self.fail("expected operand")
        raise AssertionError("unreachable")


def parse_cond(src: str) -> CondExpr:
    """Parse condition source text, raising :class:`ParseError` on any deviation."""
    return _Parser(src).parse()


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------

_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_ATOM = 4


def _prec(e: CondExpr) -> int:
    if isinstance(e, Or):
        return _PREC_OR
    if isinstance(e, And):
        return _PREC_AND
    if isinstance(e, Not):
        return _PREC_NOT
    return _PREC_ATOM


def _operand_source(o: Union[Ref, Lit]) -> str:
    if isinstance(o, Ref):
        return "$" + o.name
    v = o.value
    if isinstance(v, dt.date):
        return v.isoformat()
    if isinstance(v, int):
        return str(v)
    return _quote(v)


def to_source(e: CondExpr, _min_prec: int = _PREC_OR) -> str:
    """Render an expression back to canonical source.

    ``parse_cond(to_source(e)) == e`` for every expression tree, including
    hand-built ones with nested same-operator nodes (those get parentheses).
    """
    if isinstance(e, (Ref, Lit)):
        src = _operand_source(e)
    elif isinstance(e, Compare):
        src = f"{_operand_source(e.left)} {e.op} {_operand_source(e.right)}"
    elif isinstance(e, Not):
        src = "not " + to_source(e.inner, _PREC_NOT)
    elif isinstance(e, And):
        src = " and ".join(to_source(p, _PREC_AND + 1) for p in e.parts)
    elif isinstance(e, Or):
        src = " or ".join(to_source(p, _PREC_OR + 1) for p in e.parts)
    else:  # pragma: no cover
        raise TypeError(f"not a CondExpr: {e!r}")
    if _prec(e) < _min_prec:
        return "(" + src + ")"
    return src


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def value_kind(v: Value) -> str:
    if isinstance(v, bool):  # bool is an int subclass; never a legal value
        raise KindMismatch("boolean is not a parameter value kind")
    if isinstance(v, int):
        return "integer"
    if isinstance(v, str):
        return "string"
    if isinstance(v, dt.date):
        return "date"
    raise KindMismatch(f"unsupported value {v!r}")


def _resolve(o: Union[Ref, Lit], env: Mapping[str, Value]):
    """Return the operand's value, or None when it is an unbound reference."""
    if isinstance(o, Lit):
        return o.value
    return env.get(o.name)


def _compare(op: str, left: Value, right: Value) -> bool:
    lk, rk = value_kind(left), value_kind(right)
    if lk != rk:
        raise KindMismatch(f"cannot compare {lk} with {rk} ({left!r} {op} {right!r})")
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def _truthy(v: Value) -> bool:
    if isinstance(v, dt.date):
        return True
    return bool(v)


def eval_cond(e: CondExpr, env: Mapping[str, Value]) -> Tri:
    """Evaluate under a possibly-partial environment (strong Kleene).

    Every sub-expression is evaluated — there is no short-circuiting — so a
    kind mismatch anywhere raises even when the overall truth value would
    not depend on it.
    """
    if isinstance(e, (Ref, Lit)):
        v = _resolve(e, env)
        if v is None:
            return Tri.UNKNOWN
        return Tri.TRUE if _truthy(v) else Tri.FALSE
    if isinstance(e, Compare):
        left = _resolve(e.left, env)
        right = _resolve(e.right, env)
        if left is None or right is None:
            return Tri.UNKNOWN
        return Tri.TRUE if _compare(e.op, left, right) else Tri.FALSE
    if isinstance(e, Not):
        inner = eval_cond(e.inner, env)
        if inner is Tri.UNKNOWN:
            return Tri.UNKNOWN
        return Tri.FALSE if inner is Tri.TRUE else Tri.TRUE
    if isinstance(e, And):
        results = [eval_cond(p, env) for p in e.parts]
        if Tri.FALSE in results:
            return Tri.FALSE
        if Tri.UNKNOWN in results:
            return Tri.UNKNOWN
        return Tri.TRUE
    if isinstance(e, Or):
        results = [eval_cond(p, env) for p in e.parts]
        if Tri.TRUE in results:
            return Tri.TRUE
        if Tri.UNKNOWN in results:
            return Tri.UNKNOWN
        return Tri.FALSE
    raise TypeError(f"not a CondExpr: {e!r}")


def free_refs(e: CondExpr) -> frozenset[str]:
    """The set of reference names occurring in the expression."""
    if isinstance(e, Ref):
        return frozenset((e.name,))
    if isinstance(e, Lit):
        return frozenset()
    if isinstance(e, Compare):
        return free_refs(e.left) | free_refs(e.right)
    if isinstance(e, Not):
        return free_refs(e.inner)
    if isinstance(e, (And, Or)):
        out: frozenset[str] = frozenset()
        for p in e.parts:
            out |= free_refs(p)
        return out
    raise TypeError(f"not a CondExpr: {e!r}")
