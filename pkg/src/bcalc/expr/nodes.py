"""Immutable expression trees over boundary and interior coordinates.

A ``BExpr`` is a node with an operator tag, a tuple of child nodes and an
optional payload (a rational for constants and exponents, a name for
variables).  Nodes hash and compare structurally, so they can be used as
dictionary keys and cached freely.

Supported operators::

    const  var  +  -  neg  *  /  pow  log  loglog  exp  sin  cos

``log`` and ``loglog`` only take a boundary variable; ``loglog`` stands for
``log(-log x)`` on ``0 < x < 1``.  Everything else nests arbitrarily.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

from ..errors import UnsupportedNode

Number = Union[int, Fraction]

OPS = frozenset(
    {"const", "var", "+", "-", "neg", "*", "/", "pow", "log", "loglog", "exp", "sin", "cos"}
)
UNARY_FUNCS = ("exp", "sin", "cos")


class BExpr:
    __slots__ = ("op", "args", "data", "_hash", "_vars")

    def __init__(self, op: str, args: tuple = (), data=None):
        if op not in OPS:
            raise UnsupportedNode(f"unknown operator {op!r}")
        self.op = op
        self.args = tuple(args)
        self.data = data
        self._hash = hash((op, self.args, data))
        self._vars = None

    # structural identity
    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, BExpr):
            return NotImplemented
        return self._hash == other._hash and self.op == other.op and self.data == other.data and self.args == other.args

    def __hash__(self):
        return self._hash

    def __repr__(self):
        from .sexpr import to_sexpr

        return f"BExpr({to_sexpr(self)!r})"

    def __str__(self):
        from .sexpr import to_sexpr

        return to_sexpr(self)

    # variables
    @property
    def variables(self) -> frozenset:
        """Set of ``(name, is_boundary)`` pairs this node depends on."""
        if self._vars is None:
            if self.op == "var":
                self._vars = frozenset({self.data})
            else:
                acc = frozenset()
                for a in self.args:
                    acc = acc | a.variables
                self._vars = acc
        return self._vars

    @property
    def var_names(self) -> frozenset:
        return frozenset(v[0] for v in self.variables)

    def depends_on(self, name: str) -> bool:
        return name in self.var_names

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    @property
    def value(self) -> Fraction:
        if self.op != "const":
            raise TypeError("not a constant")
        return self.data

    # arithmetic sugar
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return BExpr("-", (self, as_expr(other)))

    def __rsub__(self, other):
        return BExpr("-", (as_expr(other), self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return BExpr("/", (self, as_expr(other)))

    def __rtruediv__(self, other):
        return BExpr("/", (as_expr(other), self))

    def __neg__(self):
        return BExpr("neg", (self,))

    def __pow__(self, q):
        return power(self, q)


def as_expr(v) -> BExpr:
    if isinstance(v, BExpr):
        return v
    if isinstance(v, (int, Fraction)):
        return const(v)
    if isinstance(v, float):
        return const(Fraction(v).limit_denominator(10**12))
    raise TypeError(f"cannot convert {type(v).__name__} to BExpr")


def const(v: Number | str) -> BExpr:
    return BExpr("const", (), Fraction(v))


ZERO = const(0)
ONE = const(1)


def var(name: str, boundary: bool = True) -> BExpr:
    return BExpr("var", (), (name, bool(boundary)))


def bvar(name: str) -> BExpr:
    return var(name, True)


def ivar(name: str) -> BExpr:
    return var(name, False)


def add(*terms: BExpr) -> BExpr:
    flat = []
    for t in terms:
        flat.extend(t.args if t.op == "+" else (t,))
    if len(flat) == 1:
        return flat[0]
    return BExpr("+", tuple(flat))


def mul(*factors: BExpr) -> BExpr:
    flat = []
    for f in factors:
        flat.extend(f.args if f.op == "*" else (f,))
    if len(flat) == 1:
        return flat[0]
    return BExpr("*", tuple(flat))


def power(base: BExpr, q: Number | str) -> BExpr:
    return BExpr("pow", (as_expr(base),), Fraction(q))


def _boundary_arg(x: BExpr, fn: str) -> BExpr:
    if x.op != "var" or not x.data[1]:
        raise UnsupportedNode(f"{fn} takes a boundary variable, got {x}")
    return x


def log(x: BExpr) -> BExpr:
    return BExpr("log", (_boundary_arg(x, "log"),))


def loglog(x: BExpr) -> BExpr:
    """``log(-log x)``, defined for ``0 < x < 1``."""
    return BExpr("loglog", (_boundary_arg(x, "loglog"),))


def exp(u: BExpr) -> BExpr:
    return BExpr("exp", (as_expr(u),))


def sin(u: BExpr) -> BExpr:
    return BExpr("sin", (as_expr(u),))


def cos(u: BExpr) -> BExpr:
    return BExpr("cos", (as_expr(u),))


def substitute(e: BExpr, mapping: dict) -> BExpr:
    """Replace variables (by name) with expressions."""
    cache: dict = {}

    def go(n: BExpr) -> BExpr:
        if n in cache:
            return cache[n]
        if n.op == "var":
            out = mapping.get(n.data[0], n)
        elif n.op in ("log", "loglog") and n.args[0].data[0] in mapping:
            out = _compose_log(n.op, mapping[n.args[0].data[0]])
        elif not n.args:
            out = n
        else:
            out = BExpr(n.op, tuple(go(a) for a in n.args), n.data)
        cache[n] = out
        return out

    return go(e)


def _compose_log(op: str, target: BExpr) -> BExpr:
    """log / loglog of a substituted expression.

    Only monomial-like targets ``c * x^a * exp(u) * ...`` stay inside the
    algebra; the logarithm is expanded into a sum of closed-form pieces.
    """
    from .simplify import log_expand

    inner = log_expand(target)
    if op == "log":
        return inner
    raise UnsupportedNode("loglog of a composite expression is outside the algebra")


def iter_nodes(e: BExpr) -> Iterable[BExpr]:
    seen = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        yield n
        stack.extend(n.args)
