"""Canonical form: expanded sums of rational multiples of monomials.

A monomial is a sorted tuple of ``(atom, exponent)`` pairs.  Atoms are
variables, ``log``/``loglog`` nodes, ``exp``/``sin``/``cos`` of canonical
arguments, positive constants raised to non-integer powers, and sums that
carry a negative or fractional exponent.  Two expressions that differ only
by ring identities (distributivity, commuting factors, collecting powers)
reach the same canonical tree, which is what the symbolic identity checks
rely on.  This is deliberately not a general simplifier: ``sin^2 + cos^2``
stays as it is.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from ..errors import UnsupportedNode
from .nodes import BExpr, ONE, ZERO, const

Poly = dict  # monomial tuple -> Fraction
_MAX_EXPAND = 8


def _key(atom: BExpr) -> str:
    from .sexpr import to_sexpr

    return to_sexpr(atom)


def _is_positive_atom(atom: BExpr) -> bool:
    if atom.op == "var":
        return atom.data[1]
    if atom.op == "exp":
        return True
    if atom.op == "const":
        return atom.data > 0
    return False


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    acc: dict = dict(m1)
    for a, q in m2:
        acc[a] = acc.get(a, 0) + q
    return tuple(sorted(((a, q) for a, q in acc.items() if q != 0), key=lambda t: _key(t[0])))


def _poly_add(p: Poly, r: Poly) -> Poly:
    out = dict(p)
    for m, c in r.items():
        v = out.get(m, 0) + c
        if v == 0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _poly_mul(p: Poly, r: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in r.items():
            out = _poly_add(out, _normalize_monomial(_mono_mul(m1, m2), c1 * c2))
    return out


def _normalize_monomial(m: tuple, c: Fraction) -> Poly:
    """Fold integer powers of constants and expand integer powers of sums."""
    if c == 0:
        return {}
    exps = [(a, q) for a, q in m if a.op == "exp"]
    if len(exps) > 1 or (exps and exps[0][1] != 1):
        # exp(u)^p exp(v)^q = exp(p u + q v)
        total: Poly = {}
        for a, q in exps:
            total = _poly_add(total, _scale(_poly(a.args[0]), q))
        m = tuple(t for t in m if t[0].op != "exp")
        return _poly_mul({m: c} if m else {(): c}, _poly(BExpr("exp", (_unpoly(total),))))
    rest = []
    extra: Poly = {(): Fraction(1)}
    for a, q in m:
        if a.op == "const" and q.denominator == 1:
            c *= a.data ** int(q)
        elif a.op == "+" and q.denominator == 1 and 0 < q <= _MAX_EXPAND:
            base = _poly(a)
            for _ in range(int(q)):
                extra = _poly_mul_raw(extra, base)
        else:
            rest.append((a, q))
    if len(extra) == 1 and () in extra:
        return {tuple(rest): c * extra[()]}
    head = {tuple(rest): c}
    return _poly_mul_raw(head, extra)


def _poly_mul_raw(p: Poly, r: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in r.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _atom(a: BExpr) -> Poly:
    return {((a, Fraction(1)),): Fraction(1)}


def _rational_root(c: Fraction, q: Fraction):
    """Exact ``c**q`` for rational ``c > 0`` if it is rational, else None."""
    def iroot(n: int, k: int):
        r = round(n ** (1.0 / k))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**k == n:
                return cand
        return None

    k = q.denominator
    num, den = iroot(c.numerator, k), iroot(c.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** q.numerator


def _pow_poly(p: Poly, q: Fraction, base: BExpr) -> Poly:
    if q == 0:
        return {(): Fraction(1)}
    if not p:
        if q < 0:
            raise ZeroDivisionError("zero to a negative power")
        return {}
    if len(p) == 1:
        (m, c), = p.items()
        if q.denominator == 1:
            coeff = c ** int(q)
            extra = ()
        elif c > 0:
            r = _rational_root(c, q)
            coeff, extra = (r, ()) if r is not None else (Fraction(1), ((const(c), q),))
        else:
            return _atom_power(base, q)
        factors = list(extra)
        for a, e in m:
            if q.denominator == 1 or _is_positive_atom(a):
                factors.append((a, e * q))
            else:
                return _atom_power(base, q)
        mono = tuple(sorted(factors, key=lambda t: _key(t[0])))
        return _normalize_monomial(mono, coeff)
    if q.denominator == 1 and 0 < q <= _MAX_EXPAND:
        out: Poly = {(): Fraction(1)}
        for _ in range(int(q)):
            out = _poly_mul_raw(out, p)
        return out
    common = _common_monomial(p)
    if common:
        # (g * r)^q = g^q * r^q for a positive monomial g
        inv = tuple((a, -e) for a, e in common)
        rest = {_mono_mul(m, inv): c for m, c in p.items()}
        head = {tuple((a, e * q) for a, e in common): Fraction(1)}
        return _poly_mul(head, _atom_power(_unpoly(rest), q))
    return _atom_power(base, q)


def _common_monomial(p: Poly) -> tuple:
    """Largest monomial in positive atoms dividing every term."""
    monos = [dict(m) for m in p]
    out = []
    for a, e in monos[0].items():
        if not _is_positive_atom(a) or a.op == "const":
            continue
        es = [m.get(a) for m in monos]
        if all(x is not None for x in es):
            lo = min(es)
            if lo != 0:
                out.append((a, lo))
    return tuple(sorted(out, key=lambda t: _key(t[0])))


def _atom_power(base: BExpr, q: Fraction) -> Poly:
    return {((base, q),): Fraction(1)}


@lru_cache(maxsize=200_000)
def _poly(e: BExpr) -> Poly:
    op = e.op
    if op == "const":
        return {(): e.data} if e.data != 0 else {}
    if op in ("var", "log", "loglog"):
        return _atom(e)
    if op == "+":
        out: Poly = {}
        for a in e.args:
            out = _poly_add(out, _poly(a))
        return out
    if op == "-":
        return _poly_add(_poly(e.args[0]), _scale(_poly(e.args[1]), Fraction(-1)))
    if op == "neg":
        return _scale(_poly(e.args[0]), Fraction(-1))
    if op == "*":
        out = {(): Fraction(1)}
        for a in e.args:
            out = _poly_mul(out, _poly(a))
            if not out:
                return {}
        return out
    if op == "/":
        den = simplify(e.args[1])
        if den == ZERO:
            raise ZeroDivisionError(f"division by zero in {e}")
        return _poly_mul(_poly(e.args[0]), _pow_poly(_poly(den), Fraction(-1), den))
    if op == "pow":
        base = simplify(e.args[0])
        return _pow_poly(_poly(base), e.data, base)
    if op == "exp":
        u = simplify(e.args[0])
        if u == ZERO:
            return {(): Fraction(1)}
        # exp(q log x + rest) = x^q exp(rest)
        pu = _poly(u)
        mono: list = []
        rest: Poly = {}
        for m, c in pu.items():
            if len(m) == 1 and m[0][0].op == "log" and m[0][1] == 1:
                mono.append((m[0][0].args[0], c))
            else:
                rest[m] = c
        out = {(): Fraction(1)}
        for x, c in mono:
            out = _poly_mul(out, {((x, c),): Fraction(1)})
        if rest:
            out = _poly_mul(out, _atom(BExpr("exp", (_unpoly(rest),))))
        return out
    if op == "sin":
        u = simplify(e.args[0])
        return {} if u == ZERO else _atom(BExpr("sin", (u,)))
    if op == "cos":
        u = simplify(e.args[0])
        return {(): Fraction(1)} if u == ZERO else _atom(BExpr("cos", (u,)))
    raise UnsupportedNode(f"cannot simplify operator {op}")


def _scale(p: Poly, c: Fraction) -> Poly:
    return {m: v * c for m, v in p.items()} if c != 0 else {}


def _factor_node(a: BExpr, q: Fraction) -> BExpr:
    if q == 1:
        return a
    return BExpr("pow", (a,), q)


def _term_node(m: tuple, c: Fraction) -> BExpr:
    factors = [_factor_node(a, q) for a, q in m]
    if c != 1 or not factors:
        factors.insert(0, const(c))
    if len(factors) == 1:
        return factors[0]
    return BExpr("*", tuple(factors))


def _unpoly(p: Poly) -> BExpr:
    if not p:
        return ZERO
    terms = sorted(p.items(), key=lambda t: (len(t[0]), [(_key(a), q) for a, q in t[0]]))
    nodes = [_term_node(m, c) for m, c in terms]
    if len(nodes) == 1:
        return nodes[0]
    return BExpr("+", tuple(nodes))


@lru_cache(maxsize=200_000)
def simplify(e: BExpr) -> BExpr:
    """Canonical form of ``e`` (idempotent)."""
    return _unpoly(_poly(e))


def is_zero(e: BExpr) -> bool:
    return simplify(e) == ZERO


def equivalent(a: BExpr, b: BExpr) -> bool:
    return is_zero(BExpr("-", (a, b)))


def terms(e: BExpr) -> list[tuple[Fraction, BExpr]]:
    """Canonical ``[(coefficient, monomial expression)]`` decomposition."""
    return [(c, _term_node(m, Fraction(1))) for m, c in _poly(simplify(e)).items()]


def monomial_factors(e: BExpr):
    """For a single-term canonical expression: ``(coeff, [(atom, exponent)])``."""
    p = _poly(simplify(e))
    if len(p) != 1:
        return None
    (m, c), = p.items()
    return c, list(m)


def log_expand(e: BExpr) -> BExpr:
    """``log e`` for a positive monomial-like ``e``, expanded into the algebra."""
    p = _poly(simplify(e))
    if len(p) != 1:
        raise UnsupportedNode(f"log of a sum is outside the algebra: {e}")
    (m, c), = p.items()
    if c <= 0:
        raise UnsupportedNode("log of a non-positive constant")
    pieces: list[BExpr] = []
    if c != 1:
        raise UnsupportedNode("log of a non-unit constant is not representable")
    for a, q in m:
        if a.op == "var" and a.data[1]:
            pieces.append(_term_node(((BExpr("log", (a,)), Fraction(1)),), q))
        elif a.op == "exp":
            pieces.append(simplify(BExpr("*", (const(q), a.args[0]))))
        else:
            raise UnsupportedNode(f"log of {a} is outside the algebra")
    if not pieces:
        return ZERO
    return simplify(BExpr("+", tuple(pieces))) if len(pieces) > 1 else simplify(pieces[0])


__all__ = ["simplify", "is_zero", "equivalent", "terms", "monomial_factors", "log_expand", "ONE", "ZERO"]
