"""Numerical evaluation with boundary-limit conventions."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping

import mpmath

from ..errors import DomainError
from .nodes import BExpr, iter_nodes


class _Float:
    log = staticmethod(math.log)
    exp = staticmethod(math.exp)
    sin = staticmethod(math.sin)
    cos = staticmethod(math.cos)

    @staticmethod
    def num(q: Fraction):
        return q.numerator / q.denominator

    @staticmethod
    def conv(v):
        return float(v)


class _Mp:
    log = staticmethod(mpmath.log)
    exp = staticmethod(mpmath.exp)
    sin = staticmethod(mpmath.sin)
    cos = staticmethod(mpmath.cos)

    @staticmethod
    def num(q: Fraction):
        return mpmath.mpf(q.numerator) / q.denominator

    @staticmethod
    def conv(v):
        return mpmath.mpf(v)


def _raw(e: BExpr, env: Mapping[str, object], B) -> object:
    memo: dict = {}

    def go(n: BExpr):
        if n in memo:
            return memo[n]
        op = n.op
        if op == "const":
            r = B.num(n.data)
        elif op == "var":
            try:
                r = env[n.data[0]]
            except KeyError:
                raise DomainError(f"no value for variable {n.data[0]!r}") from None
        elif op == "+":
            r = sum((go(a) for a in n.args[1:]), go(n.args[0]))
        elif op == "-":
            r = go(n.args[0]) - go(n.args[1])
        elif op == "neg":
            r = -go(n.args[0])
        elif op == "*":
            r = go(n.args[0])
            for a in n.args[1:]:
                r = r * go(a)
        elif op == "/":
            den = go(n.args[1])
            if den == 0:
                raise DomainError(f"division by zero in {n}")
            r = go(n.args[0]) / den
        elif op == "pow":
            base, q = go(n.args[0]), n.data
            if base == 0:
                if q > 0:
                    r = B.num(Fraction(0))
                else:
                    raise DomainError(f"0 to the power {q}")
            elif base < 0:
                if q.denominator != 1:
                    if q.denominator % 2 == 1:
                        sign = -1 if q.numerator % 2 else 1
                        r = sign * (-base) ** B.num(q)
                    else:
                        raise DomainError(f"negative base to the power {q}")
                else:
                    r = base ** int(q)
            else:
                r = base ** (int(q) if q.denominator == 1 else B.num(q))
        elif op == "log":
            x = go(n.args[0])
            if x <= 0:
                raise DomainError("log of a non-positive value")
            r = B.log(x)
        elif op == "loglog":
            x = go(n.args[0])
            if not 0 < x < 1:
                raise DomainError("log(-log x) needs 0 < x < 1")
            r = B.log(-B.log(x))
        elif op == "exp":
            r = B.exp(go(n.args[0]))
        elif op == "sin":
            r = B.sin(go(n.args[0]))
        elif op == "cos":
            r = B.cos(go(n.args[0]))
        else:  # pragma: no cover - constructor rejects unknown ops
            raise DomainError(op)
        memo[n] = r
        return r

    return go(e)


def _check_env(e: BExpr, point: Mapping[str, float]):
    for name, boundary in e.variables:
        if name not in point:
            raise DomainError(f"no value for variable {name!r}")
        if boundary and point[name] < 0:
            raise DomainError(f"negative boundary coordinate {name}={point[name]}")


def _zero_power(e: BExpr, point: Mapping[str, float]):
    """Literal ``pow(u, 0)`` with ``u`` vanishing at the point is 0^0."""
    for n in iter_nodes(e):
        if n.op == "pow" and n.data <= 0:
            try:
                base = evaluate(n.args[0], point)
            except DomainError:
                continue
            if base == 0:
                raise DomainError(f"indeterminate power {n} at {dict(point)}")


def evaluate(e: BExpr, point: Mapping[str, float]) -> float:
    """Value of ``e`` at ``point`` (a name -> number mapping).

    At a boundary coordinate equal to 0 the value is the limit along that
    face, which exists for r-smooth expressions: decaying terms give 0 and
    ``x * d/dx`` of anything bounded vanishes there.  A missing or infinite
    limit raises ``DomainError``.
    """
    _check_env(e, point)
    zero_faces = [n for n, b in sorted(e.variables) if b and point[n] == 0]
    if not zero_faces:
        try:
            return float(_raw(e, {k: float(v) for k, v in point.items()}, _Float))
        except (OverflowError, ZeroDivisionError) as exc:
            raise DomainError(str(exc)) from exc
    _zero_power(e, point)
    from .asymptotics import limit_at_face

    face = zero_faces[0]
    coeff = limit_at_face(e, face)
    return evaluate(coeff, point)


def evaluate_mp(e: BExpr, point: Mapping[str, object]):
    """High-precision evaluation at points with all boundary coordinates > 0."""
    return _raw(e, {k: mpmath.mpf(v) for k, v in point.items()}, _Mp)
