"""b-Jacobians, b-submersions and b-Lie brackets.

Matrices are written in the b-frames ``x_i d/dx_i`` (boundary) and
``d/dx_i`` (interior) of source and target.  Row ``j`` is a target
coordinate and column ``i`` a source coordinate; the entry is

* ``f_j^-1 x_i df_j/dx_i`` or ``f_j^-1 df_j/dx_i`` for a boundary target,
* ``x_i df_j/dx_i`` or ``df_j/dx_i`` for an interior target,

so a boundary/boundary entry equals ``a_ij + F_j^-1 x_i dF_j/dx_i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .atlas import ChartedMap, Chart, DEFAULT_SAMPLES
from .errors import NotInterior
from .expr import BExpr, b_derivative, const, evaluate, simplify
from .expr.nodes import BExpr as _B

RANK_RTOL = 1e-8
NEAR_FACTOR = 100.0


class RankWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BFrameMatrix:
    rows: tuple  # target coordinates
    cols: tuple  # source coordinates
    entries: tuple  # tuple of tuples of BExpr

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    @property
    def shape(self):
        return len(self.rows), len(self.cols)

    def at(self, point) -> np.ndarray:
        return np.array([[evaluate(e, point) for e in row] for row in self.entries], dtype=float)

    def to_json(self) -> list:
        return [[str(e) for e in row] for row in self.entries]


def b_jacobian(f: ChartedMap) -> BFrameMatrix:
    if not f.flags.interior:
        raise NotInterior(f"{f.name or 'map'} has a vanishing boundary component")
    rows = []
    bnd = f.source.boundary_coords
    for j, fj in enumerate(f.components):
        row = []
        for x in f.source.coords:
            isb = f.source.is_boundary(x)
            if j < f.target.k:
                # factored form keeps the entry finite on the faces
                fc = f.factored[j]
                d = simplify(_B("/", (b_derivative(fc.factor, x, boundary=isb), fc.factor)))
                if isb:
                    d = simplify(_B("+", (const(fc.exponents[bnd.index(x)]), d)))
            else:
                d = b_derivative(fj, x, boundary=isb)
            row.append(d)
        rows.append(tuple(row))
    return BFrameMatrix(f.target.coords, f.source.coords, tuple(rows))


@dataclass
class SubmersionReport:
    submersion: bool
    status: str  # "ok" or "warning"
    worst_ratio: float
    samples: int
    failures: list = field(default_factory=list)

    def __bool__(self):
        return self.submersion

    def to_json(self) -> dict:
        return {"b_submersion": self.submersion, "status": self.status,
                "min_sigma_ratio": self.worst_ratio, "samples": self.samples,
                "failures": self.failures[:5]}


def submersion_report(f: ChartedMap, samples: int = DEFAULT_SAMPLES) -> SubmersionReport:
    """Full-rank test of the b-Jacobian on interior, face and corner samples."""
    J = b_jacobian(f)
    n = f.target.dimension
    worst = np.inf
    near = False
    failures = []
    pts = f.samples(samples, include_faces=True)
    for pt in pts:
        M = J.at(pt)
        if n == 0:
            continue
        s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
        if len(s) < n or s[0] == 0:
            ratio = 0.0
        else:
            ratio = s[n - 1] / s[0]
        worst = min(worst, ratio)
        if ratio <= RANK_RTOL:
            failures.append({k: round(v, 6) for k, v in pt.items()})
        elif ratio <= NEAR_FACTOR * RANK_RTOL:
            near = True
    ok = not failures
    status = "warning" if near else "ok"
    if near:
        warnings.warn(f"{f.name or 'map'}: b-Jacobian close to the rank threshold", RankWarning, stacklevel=2)
    return SubmersionReport(ok, status, float(worst if np.isfinite(worst) else 1.0), len(pts), failures)


def is_b_submersion(f: ChartedMap, samples: int = DEFAULT_SAMPLES) -> bool:
    return submersion_report(f, samples).submersion


def is_b_fibration(f: ChartedMap, samples: int = DEFAULT_SAMPLES) -> bool:
    if not f.flags.interior:
        raise NotInterior(f"{f.name or 'map'} is not interior")
    return f.flags.b_normal and is_b_submersion(f, samples)


@dataclass(frozen=True)
class BVectorField:
    """``sum_i coeffs[i] * e_i`` in the b-frame of ``chart``."""

    chart: Chart
    coeffs: tuple

    @classmethod
    def from_strings(cls, chart: Chart, coeffs: Sequence) -> "BVectorField":
        return cls(chart, tuple(chart.parse(c) if isinstance(c, str) else c for c in coeffs))

    def __post_init__(self):
        if len(self.coeffs) != self.chart.dimension:
            raise ValueError("one coefficient per coordinate required")

    def simplified(self) -> "BVectorField":
        return BVectorField(self.chart, tuple(simplify(c) for c in self.coeffs))

    def apply(self, g: BExpr) -> BExpr:
        """Derivative of a function along the field."""
        terms = [_B("*", (c, b_derivative(g, x, boundary=self.chart.is_boundary(x))))
                 for c, x in zip(self.coeffs, self.chart.coords)]
        return simplify(_B("+", tuple(terms))) if len(terms) > 1 else simplify(terms[0])

    def to_json(self) -> list:
        return [str(c) for c in self.coeffs]


def b_lie_bracket(u: BVectorField, v: BVectorField) -> BVectorField:
    """``w_i = sum_j (u_j e_j(v_i) - v_j e_j(u_i))`` with ``e_j`` the b-frame derivations."""
    if u.chart != v.chart:
        raise ValueError("vector fields live on different charts")
    c = u.chart
    out = []
    for i in range(c.dimension):
        terms = []
        for j, x in enumerate(c.coords):
            bnd = c.is_boundary(x)
            terms.append(_B("*", (u.coeffs[j], b_derivative(v.coeffs[i], x, boundary=bnd))))
            terms.append(_B("neg", (_B("*", (v.coeffs[j], b_derivative(u.coeffs[i], x, boundary=bnd))),)))
        out.append(simplify(_B("+", tuple(terms))))
    return BVectorField(c, tuple(out))


def chain_rule_residual(f: ChartedMap, g: ChartedMap, points: Sequence[dict]) -> float:
    """Largest entry of ``J(g o f) - (J(g) o f) J(f)`` over ``points``."""
    Jf, Jg, Jgf = b_jacobian(f), b_jacobian(g), b_jacobian(f.then(g))
    worst = 0.0
    for pt in points:
        img = f(pt)
        lhs = Jgf.at(pt)
        rhs = Jg.at(img) @ Jf.at(pt)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs)))))
    return worst
