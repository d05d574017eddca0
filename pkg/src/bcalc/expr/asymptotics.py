"""Generalised power-log series at a boundary face and leading behaviour.

Near a face ``x = 0`` every expression in the algebra is expanded into a
finite sum of terms ``coeff * x^a * (log x)^b * (log(-log x))^c`` plus an
error that is smaller than a recorded cutoff term.  Coefficients are
expressions in the other coordinates; they may also contain bounded
log-periodic factors such as ``sin(log x)``, which are flagged as
oscillatory.

Terms are keyed by ``(a, -b, -c)`` so that ascending keys run from the
most to the least dominant term as ``x -> 0``.  The series keeps at most a
fixed window of exponents and a fixed number of terms; anything that
cancels beyond that window is reported as ``Indeterminate`` instead of
being guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import mpmath

from ..errors import DomainError, Indeterminate
from .nodes import BExpr, ONE, ZERO, const, var
from .simplify import simplify

INF = math.inf
INF_KEY = (INF, INF, INF)
UNIT_KEY = (Fraction(0), 0, 0)
WINDOW = Fraction(4)
MAX_TERMS = 10
MAX_TAYLOR = 40

FIT_GRID = tuple(range(10, 41))
FIT_TOL = 1e-3


def key_add(k1, k2):
    if k1[0] == INF or k2[0] == INF:
        return INF_KEY
    return (k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2])


def key_sub(k1, k2):
    return (k1[0] - k2[0], k1[1] - k2[1], k1[2] - k2[2])


@dataclass(frozen=True)
class Series:
    terms: tuple  # sorted ((key, coeff), ...)
    order: tuple = INF_KEY

    @property
    def exact(self) -> bool:
        return self.order == INF_KEY

    @property
    def lead(self):
        return self.terms[0] if self.terms else None

    def lead_or_order(self):
        return self.terms[0][0] if self.terms else self.order

    def as_dict(self) -> dict:
        return dict(self.terms)


def _make(d: dict, order) -> Series:
    items = sorted(((k, c) for k, c in d.items() if k < order and c != ZERO), key=lambda t: t[0])
    if items:
        lead = items[0][0]
        cap = (lead[0] + WINDOW, -INF, -INF)
        if cap < order:
            order = cap
            items = [t for t in items if t[0] < order]
        if len(items) > MAX_TERMS:
            order = min(order, items[MAX_TERMS][0])
            items = items[:MAX_TERMS]
    return Series(tuple(items), order)


def _coeff_sum(a: BExpr, b: BExpr) -> BExpr:
    return simplify(BExpr("+", (a, b)))


def _coeff_mul(a: BExpr, b: BExpr) -> BExpr:
    if a == ONE:
        return b
    if b == ONE:
        return a
    return simplify(BExpr("*", (a, b)))


ZERO_SERIES = Series((), INF_KEY)
ONE_SERIES = Series(((UNIT_KEY, ONE),), INF_KEY)


def s_const(c: BExpr) -> Series:
    c = simplify(c)
    return ZERO_SERIES if c == ZERO else Series(((UNIT_KEY, c),), INF_KEY)


def s_add(s: Series, t: Series) -> Series:
    d = s.as_dict()
    for k, c in t.terms:
        d[k] = _coeff_sum(d[k], c) if k in d else c
    return _make(d, min(s.order, t.order))


def s_scale(s: Series, c: BExpr, key=UNIT_KEY) -> Series:
    c = simplify(c)
    if c == ZERO:
        return ZERO_SERIES
    d = {key_add(k, key): _coeff_mul(v, c) for k, v in s.terms}
    order = key_add(s.order, key)
    return _make(d, order)


def s_mul(s: Series, t: Series) -> Series:
    if (not s.terms and s.exact) or (not t.terms and t.exact):
        return ZERO_SERIES
    order = min(key_add(s.lead_or_order(), t.order), key_add(t.lead_or_order(), s.order))
    d: dict = {}
    for k1, c1 in s.terms:
        for k2, c2 in t.terms:
            k = key_add(k1, k2)
            if k >= order:
                continue
            p = _coeff_mul(c1, c2)
            d[k] = _coeff_sum(d[k], p) if k in d else p
    return _make(d, order)


def _is_small(k) -> bool:
    return k > UNIT_KEY


def _taylor(eps: Series, coeff) -> Series:
    """``sum_n coeff(n) * eps**n`` for a series ``eps`` tending to 0."""
    out = s_const(const(coeff(0)))
    power = ONE_SERIES
    for n in range(1, MAX_TAYLOR + 1):
        power = s_mul(power, eps)
        if not power.terms and power.exact:
            return out
        c = coeff(n)
        if c != 0:
            out = s_add(out, s_scale(power, const(c)))
        if power.lead_or_order() >= out.order:
            return out
    return Series(out.terms, min(out.order, power.lead_or_order()))


def _binom(q: Fraction):
    def c(n: int) -> Fraction:
        r = Fraction(1)
        for i in range(n):
            r *= (q - i) / (i + 1)
        return r

    return c


def _depends(c: BExpr, face: str) -> bool:
    return face in c.var_names


def s_pow(s: Series, q: Fraction, face: str) -> Series:
    if q == 0:
        return ONE_SERIES
    if not s.terms:
        if s.exact:
            if q < 0:
                raise DomainError("zero raised to a negative power")
            return ZERO_SERIES
        raise Indeterminate("cancellation beyond the expansion window")
    if q.denominator == 1 and 0 < q <= 8:
        out = s
        for _ in range(int(q) - 1):
            out = s_mul(out, s)
        return out
    lk, lc = s.terms[0]
    if _depends(lc, face):
        raise Indeterminate("power of an oscillating leading coefficient")
    b, c = -lk[1], -lk[2]
    if (b * q).denominator != 1 or (c * q).denominator != 1:
        raise Indeterminate("non-integer power of a logarithm")
    sign_b = const(-1 if b % 2 else 1)
    new_coeff = simplify(BExpr("*", (BExpr("pow", (BExpr("*", (lc, sign_b)),), q),
                                     const(-1 if (b * q) % 2 else 1))))
    new_key = (lk[0] * q, int(lk[1] * q), int(lk[2] * q))
    inv = simplify(BExpr("pow", (lc,), Fraction(-1)))
    eps_d = {key_sub(k, lk): _coeff_mul(v, inv) for k, v in s.terms[1:]}
    eps_order = key_sub(s.order, lk) if s.order != INF_KEY else INF_KEY
    eps = _make(eps_d, eps_order)
    return s_scale(_taylor(eps, _binom(q)), new_coeff, new_key)


def _split(s: Series):
    big = [(k, c) for k, c in s.terms if k < UNIT_KEY]
    mid = [c for k, c in s.terms if k == UNIT_KEY]
    small = {k: c for k, c in s.terms if k > UNIT_KEY}
    if not s.order > UNIT_KEY:
        raise Indeterminate("bounded part of an exponent not resolved")
    return big, (mid[0] if mid else ZERO), _make(small, s.order)


def _fact(n: int) -> int:
    return math.factorial(n)


def s_exp(s: Series, face: str) -> Series:
    big, mid, eps = _split(s)
    key = UNIT_KEY
    coeff: BExpr = simplify(BExpr("exp", (mid,)))
    for k, c in big:
        if k == (0, -1, 0) and c.is_const:
            key = key_add(key, (c.value, 0, 0))
        elif k == (0, 0, -1) and c.is_const and c.value.denominator == 1:
            m = int(c.value)
            key = key_add(key, (Fraction(0), -m, 0))
            coeff = _coeff_mul(coeff, const((-1) ** (m % 2)))
        else:
            raise Indeterminate("exponential of an unbounded non-logarithmic term")
    return s_scale(_taylor(eps, lambda n: Fraction(1, _fact(n))), coeff, key)


def _phase(s: Series, face: str):
    big, mid, eps = _split(s)
    theta = mid
    for k, c in big:
        if k == (0, -1, 0) and not _depends(c, face):
            theta = simplify(BExpr("+", (theta, BExpr("*", (c, BExpr("log", (var(face, True),)))))))
        else:
            raise Indeterminate("trigonometric function of an unbounded term")
    return theta, eps


def _sin_coeff(n: int) -> Fraction:
    return Fraction(0) if n % 2 == 0 else Fraction((-1) ** ((n - 1) // 2), _fact(n))


def _cos_coeff(n: int) -> Fraction:
    return Fraction(0) if n % 2 == 1 else Fraction((-1) ** (n // 2), _fact(n))


def s_sin(s: Series, face: str, cosine: bool = False) -> Series:
    theta, eps = _phase(s, face)
    sin_t = simplify(BExpr("sin", (theta,)))
    cos_t = simplify(BExpr("cos", (theta,)))
    se, ce = _taylor(eps, _sin_coeff), _taylor(eps, _cos_coeff)
    if cosine:
        return s_add(s_scale(ce, cos_t), s_scale(se, simplify(BExpr("neg", (sin_t,)))))
    return s_add(s_scale(ce, sin_t), s_scale(se, cos_t))


@lru_cache(maxsize=100_000)
def expand(e: BExpr, face: str) -> Series:
    """Series of ``e`` as the boundary coordinate ``face`` tends to 0."""
    if face not in e.var_names:
        return s_const(e)
    op, a = e.op, e.args
    if op == "var":
        return Series((((Fraction(1), 0, 0), ONE),))
    if op == "log":
        return Series((((Fraction(0), -1, 0), ONE),))
    if op == "loglog":
        return Series((((Fraction(0), 0, -1), ONE),))
    if op == "+":
        out = ZERO_SERIES
        for t in a:
            out = s_add(out, expand(t, face))
        return out
    if op == "-":
        return s_add(expand(a[0], face), s_scale(expand(a[1], face), const(-1)))
    if op == "neg":
        return s_scale(expand(a[0], face), const(-1))
    if op == "*":
        out = ONE_SERIES
        for t in a:
            out = s_mul(out, expand(t, face))
        return out
    if op == "/":
        return s_mul(expand(a[0], face), s_pow(expand(a[1], face), Fraction(-1), face))
    if op == "pow":
        return s_pow(expand(a[0], face), e.data, face)
    if op == "exp":
        return s_exp(expand(a[0], face), face)
    if op == "sin":
        return s_sin(expand(a[0], face), face)
    if op == "cos":
        return s_sin(expand(a[0], face), face, cosine=True)
    raise Indeterminate(f"no expansion rule for {op}")


def series(e: BExpr, face: str) -> Series:
    return expand(simplify(e), face)


@dataclass(frozen=True)
class LeadingBehavior:
    """``e ~ coeff * x^alpha * (log x)^log_power * (log(-log x))^loglog_power``.

    ``alpha`` is ``inf`` for an identically vanishing expression.
    """

    face: str
    alpha: Fraction | float
    log_power: int
    coeff: BExpr
    loglog_power: int = 0
    oscillatory: bool = False
    fit_slope: float | None = None
    notes: tuple = field(default=())

    @property
    def is_zero(self) -> bool:
        return self.alpha == INF

    @property
    def key(self):
        return (self.alpha, -self.log_power, -self.loglog_power)

    @property
    def tends_to_zero(self) -> bool:
        return self.is_zero or self.key > UNIT_KEY

    @property
    def continuous(self) -> bool:
        """A finite limit exists at the face."""
        return self.tends_to_zero or (self.key == UNIT_KEY and not self.oscillatory)

    @property
    def power_decay(self) -> bool:
        """``O(x^a)`` for some ``a > 0``."""
        return self.is_zero or self.alpha > 0

    @property
    def log_decay(self) -> bool:
        """``O(|log x|^-a)`` for some ``a > 0``."""
        return self.power_decay or (self.alpha == 0 and self.log_power < 0)

    def as_tuple(self):
        return (self.alpha, self.log_power, self.coeff)


def default_sample(e: BExpr, face: str, sample: Mapping[str, float] | None = None) -> dict:
    pt = {}
    for name, boundary in e.variables:
        if name == face:
            continue
        pt[name] = 0.5 if boundary else 0.25
    if sample:
        pt.update({k: v for k, v in sample.items() if k != face})
    return pt


def _fit(e: BExpr, s: Series, face: str, sample: dict) -> float:
    """Slope of ``log|e / model|`` against ``log x`` plus the model exponent."""
    from .evaluate import evaluate_mp

    lead_alpha = s.terms[0][0][0]
    xs, ys = [], []
    with mpmath.workdps(60):
        for n in FIT_GRID:
            x = mpmath.mpf(2) ** (-n)
            pt = dict(sample)
            pt[face] = x
            try:
                val = evaluate_mp(e, pt)
                model = mpmath.mpf(0)
                for (a, nb, nc), c in s.terms:
                    lx = mpmath.log(x)
                    term = evaluate_mp(c, pt) * x ** (mpmath.mpf(a.numerator) / a.denominator)
                    term *= lx ** (-nb)
                    if nc:
                        term *= mpmath.log(-lx) ** (-nc)
                    model += term
            except (DomainError, ZeroDivisionError, ValueError):
                continue
            if val == 0 or model == 0:
                continue
            scale = model / x ** (mpmath.mpf(lead_alpha.numerator) / lead_alpha.denominator)
            xs.append(float(mpmath.log(x)))
            ys.append(float(mpmath.log(abs(val / scale))))
    if len(xs) < 10:
        raise Indeterminate("too few usable points for the log-log fit")
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    sxx = sum((u - mx) ** 2 for u in xs)
    sxy = sum((u - mx) * (v - my) for u, v in zip(xs, ys))
    return sxy / sxx


def leading_behavior(e: BExpr, face, sample: Mapping[str, float] | None = None,
                     verify: bool = True) -> LeadingBehavior:
    """Leading term of ``e`` as the boundary coordinate ``face`` tends to 0.

    The symbolic answer is confirmed by a log-log fit over ``x = 2^-n``,
    ``n = 10..40``; a slope off by more than ``1e-3`` raises
    ``Indeterminate``.
    """
    face = face.data[0] if isinstance(face, BExpr) else face
    e = simplify(e)
    s = expand(e, face)
    if not s.terms:
        if s.exact:
            return LeadingBehavior(face, INF, 0, ZERO)
        raise Indeterminate(f"all terms of {e} cancel inside the expansion window")
    (a, nb, nc), coeff = s.terms[0]
    slope = None
    if verify:
        slope = _fit(e, s, face, default_sample(e, face, sample))
        if abs(slope - float(a)) > FIT_TOL:
            raise Indeterminate(f"log-log slope {slope:.6g} disagrees with exponent {a} for {e}")
    return LeadingBehavior(face, a, -nb, coeff, -nc, _depends(coeff, face), slope)


def limit_at_face(e: BExpr, face: str) -> BExpr:
    """Limit of ``e`` at ``face = 0`` as an expression in the other coordinates."""
    s = expand(simplify(e), face)
    if not s.terms:
        if s.exact:
            return ZERO
        raise Indeterminate(f"cannot resolve the limit of {e} at {face}=0")
    k, c = s.terms[0]
    if k > UNIT_KEY:
        return ZERO
    if k == UNIT_KEY:
        if _depends(c, face):
            raise DomainError(f"{e} oscillates without a limit at {face}=0")
        return c
    raise DomainError(f"{e} is unbounded at {face}=0")
