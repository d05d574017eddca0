"""b-derivatives and plain partial derivatives of expression trees."""

from __future__ import annotations

from fractions import Fraction

from ..errors import UnsupportedNode
from .nodes import BExpr, ONE, ZERO, const
from .simplify import simplify


def _var_kind(e: BExpr, name: str):
    for n, boundary in e.variables:
        if n == name:
            return boundary
    return None


def _mul(*fs):
    return BExpr("*", fs)


def _d(e: BExpr, name: str, b_mode: bool, memo: dict) -> BExpr:
    if name not in e.var_names:
        return ZERO
    if e in memo:
        return memo[e]
    op, a = e.op, e.args
    if op == "var":
        out = e if b_mode else ONE
    elif op == "+":
        out = BExpr("+", tuple(_d(t, name, b_mode, memo) for t in a))
    elif op == "-":
        out = BExpr("-", (_d(a[0], name, b_mode, memo), _d(a[1], name, b_mode, memo)))
    elif op == "neg":
        out = BExpr("neg", (_d(a[0], name, b_mode, memo),))
    elif op == "*":
        parts = []
        for i, f in enumerate(a):
            df = _d(f, name, b_mode, memo)
            parts.append(BExpr("*", a[:i] + (df,) + a[i + 1 :]))
        out = BExpr("+", tuple(parts)) if len(parts) > 1 else parts[0]
    elif op == "/":
        u, w = a
        num = BExpr("-", (_mul(_d(u, name, b_mode, memo), w), _mul(u, _d(w, name, b_mode, memo))))
        out = BExpr("/", (num, BExpr("pow", (w,), Fraction(2))))
    elif op == "pow":
        u, q = a[0], e.data
        if b_mode and u.op == "var":
            out = _mul(const(q), e)
        else:
            out = _mul(const(q), BExpr("pow", (u,), q - 1), _d(u, name, b_mode, memo))
    elif op == "log":
        if not b_mode:
            raise UnsupportedNode("plain derivative of log in a boundary variable")
        out = ONE
    elif op == "loglog":
        if not b_mode:
            raise UnsupportedNode("plain derivative of loglog in a boundary variable")
        out = BExpr("pow", (BExpr("log", a),), Fraction(-1))
    elif op == "exp":
        out = _mul(e, _d(a[0], name, b_mode, memo))
    elif op == "sin":
        out = _mul(BExpr("cos", a), _d(a[0], name, b_mode, memo))
    elif op == "cos":
        out = BExpr("neg", (_mul(BExpr("sin", a), _d(a[0], name, b_mode, memo)),))
    else:
        raise UnsupportedNode(f"no derivative rule for {op}")
    memo[e] = out
    return out


def _name(v) -> str:
    if isinstance(v, BExpr):
        if v.op != "var":
            raise UnsupportedNode("derivative variable must be a variable node")
        return v.data[0]
    return v


def b_derivative(e: BExpr, v, boundary: bool | None = None) -> BExpr:
    """``x d/dx`` for a boundary variable, ``d/dx`` for an interior one.

    ``v`` is a variable name or node.  The kind is read off the expression
    unless ``boundary`` is given; a variable that does not occur gives 0.
    """
    name = _name(v)
    kind = _var_kind(e, name) if boundary is None else boundary
    if kind is None:
        return ZERO
    return simplify(_d(e, name, kind, {}))


def partial(e: BExpr, v) -> BExpr:
    """Plain partial derivative (only for variables outside log nodes)."""
    return simplify(_d(e, _name(v), False, {}))


def iterated_b_derivative(e: BExpr, v, order: int) -> BExpr:
    for _ in range(order):
        e = b_derivative(e, v)
    return e
