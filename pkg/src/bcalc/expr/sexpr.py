"""Prefix s-expression text form for ``BExpr``.

Examples::

    (* (pow x 1/2) (sin (log x)))
    (/ 1 (log x))
    (+ w (* w (exp y)))

Numbers are integers, ``p/q`` rationals or decimals (read exactly).  A bare
symbol is a variable; it is a boundary coordinate unless listed in
``interior``.  Writing a tree and reading it back yields an equal tree.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from ..errors import ParseError, UnsupportedNode
from .nodes import BExpr, const, var

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_NUMBER = re.compile(r"^[+-]?(\d+(/\d+)?|\d*\.\d+([eE][+-]?\d+)?|\d+[eE][+-]?\d+)$")
_ARITY = {"-": (1, 2), "/": (2, 2), "pow": (2, 2), "log": (1, 1), "loglog": (1, 1),
          "exp": (1, 1), "sin": (1, 1), "cos": (1, 1), "+": (2, None), "*": (2, None)}


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def to_sexpr(e: BExpr) -> str:
    op = e.op
    if op == "const":
        return _fmt(e.data)
    if op == "var":
        return e.data[0]
    if op == "pow":
        return f"(pow {to_sexpr(e.args[0])} {_fmt(e.data)})"
    if op == "neg":
        return f"(- {to_sexpr(e.args[0])})"
    return "(" + " ".join([op] + [to_sexpr(a) for a in e.args]) + ")"


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"bad character at offset {pos}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse(text: str, interior: Iterable[str] = ()) -> BExpr:
    """Read an s-expression; names in ``interior`` become interior coordinates."""
    interior = set(interior)
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    pos = 0

    def atom(tok: str) -> BExpr:
        if _NUMBER.match(tok):
            return const(Fraction(tok))
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_']*$", tok):
            raise ParseError(f"bad symbol {tok!r}")
        return var(tok, tok not in interior)

    def node() -> BExpr:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == ")":
            raise ParseError("unexpected ')'")
        if tok != "(":
            return atom(tok)
        if pos >= len(tokens):
            raise ParseError("unexpected end of input")
        head = tokens[pos]
        pos += 1
        if head not in _ARITY:
            raise ParseError(f"unknown operator {head!r}")
        if head == "pow":
            base = node()
            if pos >= len(tokens) or not _NUMBER.match(tokens[pos]):
                raise ParseError("pow needs a numeric exponent")
            q = Fraction(tokens[pos])
            pos += 1
            args = [base]
        else:
            args = []
            while pos < len(tokens) and tokens[pos] != ")":
                args.append(node())
        if pos >= len(tokens):
            raise ParseError("missing ')'")
        pos += 1
        lo, hi = _ARITY[head]
        n = len(args) + (1 if head == "pow" else 0)
        if n < lo or (hi is not None and n > hi):
            raise ParseError(f"{head} takes {lo}..{hi or 'n'} arguments, got {n}")
        try:
            if head == "pow":
                return BExpr("pow", (args[0],), q)
            if head == "-" and len(args) == 1:
                return BExpr("neg", tuple(args))
            if head in ("log", "loglog"):
                a = args[0]
                if a.op != "var" or not a.data[1]:
                    raise UnsupportedNode(f"{head} takes a boundary variable")
            return BExpr(head, tuple(args))
        except UnsupportedNode as exc:
            raise ParseError(str(exc)) from exc

    out = node()
    if pos != len(tokens):
        raise ParseError("trailing tokens")
    return out
