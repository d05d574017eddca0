"""Symbolic kernel for functions near boundary faces.

Build expressions from the helpers or read them from s-expressions, take
b-derivatives, extract leading behaviour and classify smoothness::

    >>> from bcalc.expr import parse, b_derivative, classify_function
    >>> f = parse("(/ 1 (log x))")
    >>> str(b_derivative(f, "x"))
    '(* -1 (pow (log x) -2))'
    >>> classify_function(f).verdict.value
    'r-smooth-not-a'
"""

from .asymptotics import LeadingBehavior, leading_behavior, limit_at_face, series
from .calculus import b_derivative, iterated_b_derivative, partial
from .classify import (
    Classification,
    LocalModel,
    SmoothnessClass,
    classify_function,
    iterated_derivatives,
)
from .evaluate import evaluate, evaluate_mp
from .nodes import (
    BExpr,
    ONE,
    ZERO,
    add,
    bvar,
    const,
    cos,
    exp,
    ivar,
    log,
    loglog,
    mul,
    power,
    sin,
    substitute,
    var,
)
from .sexpr import parse, to_sexpr
from .simplify import equivalent, is_zero, simplify

__all__ = [
    "BExpr", "ONE", "ZERO", "add", "bvar", "const", "cos", "exp", "ivar", "log", "loglog",
    "mul", "power", "sin", "substitute", "var", "parse", "to_sexpr", "simplify", "is_zero",
    "equivalent", "b_derivative", "iterated_b_derivative", "partial", "evaluate", "evaluate_mp",
    "LeadingBehavior", "leading_behavior", "limit_at_face", "series", "Classification",
    "LocalModel", "SmoothnessClass", "classify_function", "iterated_derivatives",
]
