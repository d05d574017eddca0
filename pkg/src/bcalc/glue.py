"""Gluing profile turning a-corner data into ordinary-corner data.

Boundary coordinates are reparametrised by ``x = phi(s)`` with
``phi(s) = exp(s - 1/s)``.  A map ``f`` becomes
``f~ = phi^-1 o f o phi`` on boundary coordinates.  Evaluation works with
``log f_j = log F_j + sum_i a_ij (s_i - 1/s_i)`` so that nothing underflows
near the faces.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import mpmath

from .atlas import ChartedMap, sample_box
from .errors import DomainError, NotStronglySmooth
from .expr import evaluate, evaluate_mp, limit_at_face

PROBE_OCTAVES = range(8, 25)
CAUCHY_RTOL = 1e-3
DIVERGENCE_OCTAVES = 6
PRECISION_ENV = "BCALC_PRECISION"


def working_dps() -> int:
    return int(os.environ.get(PRECISION_ENV, "50"))


def phi(x):
    """``exp(x - 1/x)`` for ``x > 0`` and ``0`` at ``x = 0``."""
    if x < 0:
        raise DomainError(f"phi needs x >= 0, got {x}")
    if x == 0:
        return x * 0
    if isinstance(x, mpmath.mpf):
        return mpmath.exp(x - 1 / x)
    t = x - 1.0 / x
    if t > 709.0:
        return math.inf
    return math.exp(t) if t > -745.0 else 0.0


def phi_inv_log(t):
    """``phi^-1(exp(t))``: the positive root ``s`` of ``s - 1/s = t``."""
    if isinstance(t, mpmath.mpf):
        if t == mpmath.ninf:
            return mpmath.mpf(0)
        r = mpmath.sqrt(t * t + 4)
        return (t + r) / 2 if t >= 0 else 2 / (r - t)
    if t == -math.inf:
        return 0.0
    r = math.hypot(t, 2.0)
    # rationalised form avoids cancellation when t << 0
    return 0.5 * (t + r) if t >= 0 else 2.0 / (r - t)


def phi_inv(x):
    """``(log x + sqrt(log(x)^2 + 4)) / 2`` for ``x > 0`` and ``0`` at ``x = 0``."""
    if x < 0:
        raise DomainError(f"phi_inv needs x >= 0, got {x}")
    if x == 0:
        return x * 0
    return phi_inv_log(mpmath.log(x) if isinstance(x, mpmath.mpf) else math.log(x))


def _log_phi(s):
    if s == 0:
        return mpmath.ninf if isinstance(s, mpmath.mpf) else -math.inf
    return s - 1 / s


def _eval(e, point: Mapping, precise: bool):
    if not precise:
        return evaluate(e, point)
    for name, boundary in sorted(e.variables):
        if boundary and point[name] == 0:
            e = limit_at_face(e, name)
    return evaluate_mp(e, {k: v for k, v in point.items()})


@dataclass
class GlueTransform:
    """``f~ = phi^-1 o f o phi`` on boundary coordinates, identity elsewhere."""

    map: ChartedMap
    strongly_smooth: bool
    notes: list = field(default_factory=list)

    @property
    def source(self):
        return self.map.source

    @property
    def target(self):
        return self.map.target

    def __call__(self, point: Mapping, precise: bool = False) -> dict:
        f = self.map
        conv = mpmath.mpf if precise else float
        s = {k: conv(v) for k, v in point.items()}
        for name in f.source.boundary_coords:
            if s[name] < 0:
                raise DomainError(f"negative boundary coordinate {name}={s[name]}")
        x = {k: (phi(v) if f.source.is_boundary(k) else v) for k, v in s.items()}
        logs = {k: _log_phi(s[k]) for k in f.source.boundary_coords}
        out = {}
        for j, name in enumerate(f.target.coords):
            if j >= f.target.k:
                out[name] = _eval(f.components[j], x, precise)
                continue
            fc = f.factored[j]
            if fc.zero:
                out[name] = conv(0)
                continue
            t = mpmath.log(_eval(fc.factor, x, precise)) if precise else math.log(_eval(fc.factor, x, False))
            for i, b in enumerate(f.source.boundary_coords):
                a = fc.exponents[i]
                if a:
                    t = t + (conv(a.numerator) / a.denominator) * logs[b]
            out[name] = phi_inv_log(t)
        return out

    def domain(self) -> tuple:
        """Chart box in the reparametrised coordinates."""
        out = []
        for name, (lo, hi) in zip(self.source.coords, self.map.domain):
            if self.source.is_boundary(name):
                out.append((phi_inv(lo) if lo > 0 else 0.0, phi_inv(hi) if math.isfinite(hi) else hi))
            else:
                out.append((lo, hi))
        return tuple(out)

    def samples(self, n: int = 64) -> list[dict]:
        faces = [self.source.coords.index(c) for c in self.map.met_faces]
        return [dict(zip(self.source.coords, map(float, p))) for p in sample_box(self.domain(), n, faces, True)]


def transform_map(f: ChartedMap, require_strong: bool = False) -> GlueTransform:
    flags = f.flags
    if require_strong and not flags.strongly_smooth:
        raise NotStronglySmooth(f"{f.name or 'map'} is not strongly a-smooth; the gluing profile needs that")
    notes = [] if flags.strongly_smooth else ["map is not strongly a-smooth; the transformed map need not be smooth"]
    return GlueTransform(f, flags.strongly_smooth, notes)


def compose(t1: GlueTransform, t2: GlueTransform, point: Mapping, precise: bool = False) -> dict:
    """``t2(t1(point))``."""
    return t2(t1(point, precise), precise)


@dataclass
class ProbeResult:
    verdict: str  # "smooth-consistent" or "non-smooth-detected"
    point: dict
    order: int
    steps: list
    estimates: dict  # derivative label -> list of estimates, one per step
    failures: dict = field(default_factory=dict)

    @property
    def smooth(self) -> bool:
        return self.verdict == "smooth-consistent"

    def to_csv(self) -> str:
        buf = io.StringIO()
        labels = list(self.estimates)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h"] + labels)
        for k, h in enumerate(self.steps):
            w.writerow([repr(h)] + [repr(self.estimates[l][k]) for l in labels])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "point": self.point, "order": self.order,
                "final_estimates": {k: v[-1] for k, v in self.estimates.items()},
                "failures": self.failures}


def _multi_indices(coords: Sequence[str], order: int):
    for r in range(1, order + 1):
        yield from itertools.combinations_with_replacement(coords, r)


def _forward_difference(fn, base: dict, idx: tuple, h):
    """``Delta_h^idx fn(base) / h^|idx|`` with forward steps."""
    total = 0
    for signs in itertools.product((0, 1), repeat=len(idx)):
        p = dict(base)
        for s, c in zip(signs, idx):
            p[c] = p[c] + s * h
        sign = -1 if (len(idx) - sum(signs)) % 2 else 1
        total = total + sign * fn(p)
    return total / h ** len(idx)


def _converges(seq: list) -> tuple[bool, str]:
    tail = seq[-DIVERGENCE_OCTAVES:]
    mags = [abs(v) for v in tail]
    if all(b > a * 1.5 for a, b in zip(mags, mags[1:])):
        return False, "estimates grow across the last octaves"
    for a, b in zip(tail[-3:], tail[-2:]):
        if abs(b - a) > CAUCHY_RTOL * max(1.0, abs(b)):
            return False, f"successive estimates differ by {abs(b - a):.3g}"
    return True, ""


def smoothness_probe(t: GlueTransform, point: Mapping, order: int = 2,
                     component: str | None = None, octaves: Sequence[int] = PROBE_OCTAVES) -> ProbeResult:
    """Finite-difference test of the transformed map at a boundary point.

    Every derivative up to ``order`` of every target component is estimated
    with forward differences of step ``2^-n``; the map is smooth-consistent
    if all estimates settle as ``n`` grows.
    """
    comps = [component] if component else list(t.target.coords)
    steps = [mpmath.mpf(2) ** -n for n in octaves]
    estimates, failures = {}, {}
    with mpmath.workdps(working_dps()):
        base = {k: mpmath.mpf(v) for k, v in point.items()}
        cache: dict = {}

        def value(p, c):
            key = tuple(sorted(p.items()))
            if key not in cache:
                cache[key] = t(p, precise=True)
            return cache[key][c]

        for c in comps:
            for idx in _multi_indices(t.source.coords, order):
                label = f"d[{','.join(idx)}]{c}" if len(comps) > 1 else f"d[{','.join(idx)}]"
                seq = [float(_forward_difference(lambda p: value(p, c), base, idx, h)) for h in steps]
                estimates[label] = seq
                ok, why = _converges(seq)
                if not ok:
                    failures[label] = why
    verdict = "non-smooth-detected" if failures else "smooth-consistent"
    return ProbeResult(verdict, dict(point), order, [float(h) for h in steps], estimates, failures)


def round_trip_error(xs: Sequence[float] | None = None) -> float:
    """Largest relative ``|phi(phi^-1(x)) - x| / x`` on the grid."""
    xs = xs if xs is not None else [2.0**n for n in range(-60, 61)]
    worst = 0.0
    for x in xs:
        y = phi(phi_inv(x))
        worst = max(worst, abs(y - x) / x)
        z = phi_inv_log(_log_phi(x))
        worst = max(worst, abs(z - x) / x)
    return worst
