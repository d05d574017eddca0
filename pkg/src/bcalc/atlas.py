"""Charts, charted maps and atlases for manifolds with analytic corners.

A chart is a box in ``[0, inf)^k x R^(m-k)`` with named coordinates; the
first ``k`` are boundary coordinates.  A :class:`ChartedMap` sends one chart
to another by expression trees and knows its factorisation

    f_j = F_j * prod_i x_i^(a_ij)        (F_j > 0 and a-smooth)

for every boundary-valued component, from which the exponent matrix and
the map classes (interior, b-normal, strongly smooth) follow.

An :class:`Atlas` is a finite set of charts with transition maps on
overlaps.  Boundary faces and corner strata are tracked chart by chart and
glued into global components with a union-find over the transitions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import BCalcError, DomainError, FactorizationFailure, ManifestError
from .expr import (
    BExpr,
    LocalModel,
    SmoothnessClass,
    classify_function,
    const,
    evaluate,
    leading_behavior,
    parse,
    power,
    simplify,
    substitute,
    var,
)
from .expr.asymptotics import limit_at_face

INF = float("inf")
SAMPLE_SPAN = 2.0
DEFAULT_SAMPLES = 64
ROUND_TRIP_TOL = 1e-10


def _finite_interval(lo: float, hi: float) -> tuple[float, float]:
    if lo == -INF and hi == INF:
        return -SAMPLE_SPAN, SAMPLE_SPAN
    if hi == INF:
        return lo, lo + SAMPLE_SPAN
    if lo == -INF:
        return hi - SAMPLE_SPAN, hi
    return lo, hi


def sample_box(box: Sequence[tuple], n: int = DEFAULT_SAMPLES, faces: Sequence[int] = (),
               include_faces: bool = False) -> np.ndarray:
    """Deterministic low-discrepancy points in ``box``.

    Points stay strictly inside the box.  With ``include_faces`` every
    subset of the coordinates listed in ``faces`` is also pinned to its lower
    bound (0 for boundary coordinates), so faces and corners are visited.
    """
    d = len(box)
    if d == 0:
        return np.zeros((1, 0))
    fin = np.array([_finite_interval(float(lo), float(hi)) for lo, hi in box])
    lo, hi = fin[:, 0], fin[:, 1]
    pts = qmc.Halton(d, scramble=False).random(n + 1)[1:]
    margin = 1e-3
    pts = lo + (margin + (1 - 2 * margin) * pts) * (hi - lo)
    if not include_faces or not faces:
        return pts
    extra = []
    for r in range(1, len(faces) + 1):
        for sub in itertools.combinations(faces, r):
            q = pts[: max(4, n // 4)].copy()
            q[:, list(sub)] = lo[list(sub)]
            extra.append(q)
    return np.vstack([pts] + extra)


def _parse_bound(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
        return float(Fraction(s))
    return float(v)


@dataclass(frozen=True)
class Chart:
    """Box in ``[0, inf)^k x R^(m-k)``; the first ``k`` coordinates are boundary."""

    id: str
    coords: tuple
    k: int
    box: tuple

    def __post_init__(self):
        if not 0 <= self.k <= len(self.coords):
            raise ManifestError(f"chart {self.id}: need 0 <= k <= m")
        if len(self.box) != len(self.coords):
            raise ManifestError(f"chart {self.id}: box and coordinates differ in length")
        if len(set(self.coords)) != len(self.coords):
            raise ManifestError(f"chart {self.id}: repeated coordinate names")
        for i in range(self.k):
            if self.box[i][0] != 0:
                raise ManifestError(f"chart {self.id}: boundary coordinate {self.coords[i]} must start at 0")

    @classmethod
    def model(cls, id: str, boundary: Sequence[str] = (), interior: Sequence[str] = (), box=None) -> "Chart":
        coords = tuple(boundary) + tuple(interior)
        if box is None:
            box = tuple([(0.0, INF)] * len(boundary) + [(-INF, INF)] * len(interior))
        return cls(id, coords, len(boundary), tuple(tuple(map(float, b)) for b in box))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @property
    def boundary_coords(self) -> tuple:
        return self.coords[: self.k]

    @property
    def interior_coords(self) -> tuple:
        return self.coords[self.k :]

    def is_boundary(self, name: str) -> bool:
        return name in self.boundary_coords

    def variable(self, name: str) -> BExpr:
        return var(name, self.is_boundary(name))

    def parse(self, text: str) -> BExpr:
        return parse(text, interior=self.interior_coords)

    def contains(self, p: Sequence[float]) -> bool:
        return len(p) == self.dimension and all(
            (lo <= v <= hi if i < self.k else lo < v < hi) or (lo == v == 0)
            for i, (v, (lo, hi)) in enumerate(zip(p, self.box))
        )

    def depth(self, p: Sequence[float]) -> int:
        return depth(p, self)

    def center(self) -> dict:
        out = {}
        for name, (lo, hi) in zip(self.coords, self.box):
            a, b = _finite_interval(lo, hi)
            out[name] = 0.5 * (a + b) if b - a < 2 * SAMPLE_SPAN else a + 0.5
        return out


def depth(p: Sequence[float], c: Chart) -> int:
    """Number of boundary coordinates of ``p`` that vanish."""
    if len(p) != c.dimension:
        raise DomainError(f"point has {len(p)} coordinates, chart {c.id} has {c.dimension}")
    for i, (v, (lo, hi)) in enumerate(zip(p, c.box)):
        if i < c.k and v < 0:
            raise DomainError(f"negative boundary coordinate {c.coords[i]}={v}")
        if not (lo <= v <= hi):
            raise DomainError(f"coordinate {c.coords[i]}={v} outside chart {c.id}")
    return sum(1 for v in p[: c.k] if v == 0)


@dataclass(frozen=True)
class FactoredComponent:
    """``f_j = factor * prod x_i^exponents[i]`` or the zero component."""

    exponents: tuple | None
    factor: BExpr | None
    zero: bool = False

    @classmethod
    def zero_component(cls) -> "FactoredComponent":
        return cls(None, None, True)


@dataclass(frozen=True)
class MapFlags:
    smooth: bool
    interior: bool
    b_normal: bool
    strongly_smooth: bool
    diffeomorphism: bool | None = None

    def to_json(self) -> dict:
        return {"a_smooth": self.smooth, "interior": self.interior, "b_normal": self.b_normal,
                "strongly_smooth": self.strongly_smooth, "diffeomorphism": self.diffeomorphism}


class ChartedMap:
    """Map between charts given by one expression per target coordinate."""

    def __init__(self, source: Chart, target: Chart, components: Sequence, domain=None,
                 name: str = "", inverse: "ChartedMap | None" = None, order: int = 6):
        comps = tuple(source.parse(c) if isinstance(c, str) else c for c in components)
        if len(comps) != target.dimension:
            raise ManifestError(f"map {name or '?'}: {len(comps)} components for a {target.dimension}-dimensional target")
        allowed = set(source.coords)
        for c in comps:
            extra = c.var_names - allowed
            if extra:
                raise ManifestError(f"map {name or '?'}: unknown variables {sorted(extra)}")
            for n, b in c.variables:
                if b != source.is_boundary(n):
                    raise ManifestError(f"map {name or '?'}: variable {n} has the wrong kind")
        self.source, self.target, self.components = source, target, comps
        self.domain = tuple(domain) if domain is not None else source.box
        self.name = name
        self.inverse = inverse
        self.order = order

    def __repr__(self):
        return f"ChartedMap({self.name or '?'}: {self.source.id} -> {self.target.id})"

    @classmethod
    def identity(cls, chart: Chart, domain=None) -> "ChartedMap":
        m = cls(chart, chart, [chart.variable(c) for c in chart.coords], domain, name=f"id_{chart.id}")
        m.inverse = m
        return m

    # --- faces met by the domain
    @cached_property
    def met_faces(self) -> tuple:
        """Source boundary coordinates whose face meets the domain."""
        return tuple(c for i, c in enumerate(self.source.boundary_coords) if self.domain[i][0] == 0)

    def sample_point(self) -> dict:
        out = {}
        for name, (lo, hi) in zip(self.source.coords, self.domain):
            a, b = _finite_interval(lo, hi)
            out[name] = 0.5 * (a + b) if b - a < 2 * SAMPLE_SPAN else a + 0.5
        return out

    def samples(self, n: int = DEFAULT_SAMPLES, include_faces: bool = True) -> list[dict]:
        faces = [self.source.coords.index(c) for c in self.met_faces]
        pts = sample_box(self.domain, n, faces, include_faces)
        return [dict(zip(self.source.coords, map(float, p))) for p in pts]

    # --- factorisation
    @cached_property
    def factored(self) -> tuple:
        return tuple(self._factor(j) for j in range(self.target.k))

    def _factor(self, j: int) -> FactoredComponent:
        fj = simplify(self.components[j])
        if fj == const(0):
            return FactoredComponent.zero_component()
        sample = self.sample_point()
        exps = []
        for x in self.source.boundary_coords:
            if x not in self.met_faces:
                exps.append(Fraction(0))
                continue
            lb = leading_behavior(fj, x, sample)
            if lb.is_zero:
                return FactoredComponent.zero_component()
            if lb.log_power or lb.loglog_power or lb.oscillatory or lb.alpha < 0:
                raise FactorizationFailure(
                    f"{self.name or 'map'} component {self.target.coords[j]} is not a positive monomial times "
                    f"an a-smooth factor at {x}=0 (leading behaviour x^{lb.alpha} log^{lb.log_power})")
            exps.append(Fraction(lb.alpha))
        F = fj
        for x, a in zip(self.source.boundary_coords, exps):
            if a:
                F = F * power(self.source.variable(x), -a)
        F = simplify(F)
        self._check_factor(F, j)
        return FactoredComponent(tuple(exps), F, False)

    def _check_factor(self, F: BExpr, j: int):
        label = f"{self.name or 'map'} component {self.target.coords[j]}"
        model = LocalModel(tuple(c for c in self.met_faces if c in F.var_names),
                           tuple(c for c in self.source.coords if c not in self.met_faces and c in F.var_names),
                           self.sample_point())
        verdict = classify_function(F, model, order=self.order).verdict
        if verdict is not SmoothnessClass.ASmooth:
            raise FactorizationFailure(f"{label}: factor {F} is {verdict.value}, not a-smooth")
        for pt in self.samples():
            try:
                v = evaluate(F, pt)
            except BCalcError as exc:
                raise FactorizationFailure(f"{label}: factor undefined at {pt}: {exc}") from exc
            if not v > 0:
                raise FactorizationFailure(f"{label}: factor {F} is not positive at {pt}")

    @cached_property
    def exponent_matrix(self) -> tuple:
        """``A[i][j] = a_ij``; rows are source boundary faces, columns target faces.

        Zero components give ``None`` columns.
        """
        rows = []
        for i in range(self.source.k):
            rows.append(tuple(None if fc.zero else fc.exponents[i] for fc in self.factored))
        return tuple(rows)

    def interior_components_smooth(self) -> bool:
        for j in range(self.target.k, self.target.dimension):
            c = self.components[j]
            model = LocalModel(tuple(x for x in self.met_faces if x in c.var_names),
                               tuple(x for x in self.source.coords if x not in self.met_faces and x in c.var_names),
                               self.sample_point())
            if classify_function(c, model, order=self.order).verdict is not SmoothnessClass.ASmooth:
                return False
        return True

    @cached_property
    def flags(self) -> MapFlags:
        fcs = self.factored
        smooth = self.interior_components_smooth()
        interior = smooth and not any(fc.zero for fc in fcs)
        A = self.exponent_matrix
        rows_ok = all(sum(1 for a in row if a is not None and a > 0) <= 1 for row in A)
        cols_ok = all(fc.zero or sum(1 for a in fc.exponents if a > 0) <= 1 for fc in fcs)
        diffeo = None
        if self.inverse is not None:
            diffeo = interior and rows_ok and cols_ok and self.round_trip_error() <= ROUND_TRIP_TOL
        return MapFlags(smooth, interior, interior and rows_ok, smooth and cols_ok, diffeo)

    # --- numerics
    def __call__(self, point: Mapping[str, float]) -> dict:
        return {name: evaluate(c, point) for name, c in zip(self.target.coords, self.components)}

    def round_trip_error(self, n: int = DEFAULT_SAMPLES) -> float:
        if self.inverse is None:
            return INF
        worst = 0.0
        for pt in self.samples(n):
            back = self.inverse(self(pt))
            for name in self.source.coords:
                worst = max(worst, abs(back[name] - pt[name]) / max(1.0, abs(pt[name])))
        return worst

    # --- composition
    def then(self, g: "ChartedMap") -> "ChartedMap":
        """``g o self``."""
        if g.source.coords != self.target.coords:
            raise ManifestError(f"cannot compose {self} with {g}")
        mapping = dict(zip(self.target.coords, self.components))
        comps = [simplify(substitute(c, mapping)) for c in g.components]
        return ChartedMap(self.source, g.target, comps, self.domain,
                          name=f"{g.name or 'g'}o{self.name or 'f'}", order=self.order)


def factor_components(f: ChartedMap) -> list[FactoredComponent]:
    return list(f.factored)


def classify_map(f: ChartedMap) -> MapFlags:
    return f.flags


def exponent_product(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list[Fraction]]:
    """Exact matrix product of exponent matrices."""
    n, m = len(A), len(B[0]) if B else 0
    return [[sum((A[i][k] * B[k][j] for k in range(len(B))), Fraction(0)) for j in range(m)] for i in range(n)]


@dataclass(frozen=True)
class CornerComponent:
    """Local corner stratum: the faces ``{x_i = 0 : i in faces}`` of a chart."""

    chart: str
    faces: frozenset
    point: tuple | None = None

    @property
    def k(self) -> int:
        return len(self.faces)

    def to_json(self) -> dict:
        return {"chart": self.chart, "faces": sorted(self.faces), "depth": self.k}


def corner_map(f: ChartedMap, gamma: CornerComponent) -> CornerComponent:
    """Image corner stratum of ``gamma`` under ``f``.

    Target face ``j`` contains the image iff ``f_j`` vanishes identically or
    some face of ``gamma`` carries a positive exponent in ``f_j``.
    """
    if gamma.chart != f.source.id:
        raise ManifestError(f"corner component lives on {gamma.chart}, map starts at {f.source.id}")
    idx = [f.source.boundary_coords.index(x) for x in gamma.faces]
    out = set()
    for j, fc in enumerate(f.factored):
        if fc.zero or any(fc.exponents[i] > 0 for i in idx):
            out.add(f.target.coords[j])
    return CornerComponent(f.target.id, frozenset(out))


class UnionFind:
    def __init__(self, items: Iterable = ()):
        self.parent = {}
        for it in items:
            self.add(it)

    def add(self, a):
        self.parent.setdefault(a, a)

    def find(self, a):
        self.add(a)
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = sorted([ra, rb], key=repr)
            self.parent[hi] = lo

    def classes(self) -> list[list]:
        groups: dict = {}
        for a in self.parent:
            groups.setdefault(self.find(a), []).append(a)
        return sorted((sorted(g, key=repr) for g in groups.values()), key=lambda g: repr(g[0]))


@dataclass
class Transition:
    source: str
    target: str
    map: ChartedMap
    inverse: ChartedMap | None = None


@dataclass(frozen=True)
class LocalFace:
    chart: str
    coord: str

    def __repr__(self):
        return f"{self.chart}.{self.coord}"


class Atlas:
    """Finite atlas: charts plus transitions on overlaps."""

    def __init__(self, charts: Iterable[Chart], transitions: Iterable[Transition] = (),
                 face_names: Mapping[str, Sequence] | None = None, name: str = "X"):
        self.charts = {c.id: c for c in charts}
        self.transitions = list(transitions)
        self.name = name
        for t in self.transitions:
            if t.source not in self.charts or t.target not in self.charts:
                raise ManifestError(f"transition {t.source}->{t.target} refers to an unknown chart")
        self._declared_faces = dict(face_names or {})

    @property
    def dimension(self) -> int:
        dims = {c.dimension for c in self.charts.values()}
        if len(dims) > 1:
            raise ManifestError("charts of different dimensions")
        return dims.pop() if dims else 0

    # --- corner strata
    def _corner_edges(self, t: Transition, S: frozenset):
        f = t.map
        if not S <= set(f.met_faces):
            return None
        idx = [f.source.boundary_coords.index(x) for x in S]
        img = frozenset(f.target.coords[j] for j, fc in enumerate(f.factored)
                        if not fc.zero and any(fc.exponents[i] > 0 for i in idx))
        return img

    def corner_components(self, k: int) -> list[list[CornerComponent]]:
        uf = UnionFind()
        for c in self.charts.values():
            for S in itertools.combinations(c.boundary_coords, k):
                uf.add(CornerComponent(c.id, frozenset(S)))
        for t in self.transitions:
            src = self.charts[t.source]
            for S in itertools.combinations(src.boundary_coords, k):
                img = self._corner_edges(t, frozenset(S))
                if img is not None:
                    uf.union(CornerComponent(t.source, frozenset(S)), CornerComponent(t.target, img))
        return uf.classes()

    def corner_counts(self) -> dict:
        return {k: len(self.corner_components(k)) for k in range(self.dimension + 1)}

    @cached_property
    def boundary_components(self) -> list[list[LocalFace]]:
        return [[LocalFace(g.chart, next(iter(g.faces))) for g in comp] for comp in self.corner_components(1)]

    @cached_property
    def face_ids(self) -> dict:
        """Global face id -> list of local faces."""
        comps = self.boundary_components
        out = {}
        used = set()
        for fid, locs in self._declared_faces.items():
            locs = {LocalFace(*l) for l in locs}
            match = [c for c in comps if locs & set(c)]
            if len(match) != 1 or not locs <= set(match[0]):
                raise ManifestError(f"face {fid}: declared local faces do not form one boundary component")
            out[fid] = match[0]
            used.add(id(match[0]))
        for c in comps:
            if id(c) not in used:
                out[repr(c[0])] = c
        return dict(sorted(out.items()))

    def face_of(self, chart: str, coord: str) -> str:
        lf = LocalFace(chart, coord)
        for fid, locs in self.face_ids.items():
            if lf in locs:
                return fid
        raise ManifestError(f"no face {chart}.{coord}")

    def has_faces(self) -> bool:
        """No global face meets a single chart twice (the boolean injectivity check)."""
        for locs in self.face_ids.values():
            charts = [l.chart for l in locs]
            if len(charts) != len(set(charts)):
                return False
        return True

    # --- validation
    def validate(self, n: int = DEFAULT_SAMPLES) -> dict:
        report = {"round_trip": {}, "diffeomorphisms": {}, "triple_overlaps": []}
        for t in self.transitions:
            key = f"{t.source}->{t.target}"
            report["round_trip"][key] = t.map.round_trip_error(n)
            report["diffeomorphisms"][key] = bool(t.map.flags.diffeomorphism)
        report["triple_overlaps"] = self._triple_overlap_errors(n)
        report["valid"] = all(report["diffeomorphisms"].values()) and all(
            e <= ROUND_TRIP_TOL for _, e in report["triple_overlaps"])
        return report

    def _directed(self):
        out = {}
        for t in self.transitions:
            out.setdefault((t.source, t.target), []).append(t.map)
            if t.inverse is not None:
                out.setdefault((t.target, t.source), []).append(t.inverse)
        return out

    @staticmethod
    def _in_domain(m: ChartedMap, pt: Mapping[str, float]) -> bool:
        for name, (lo, hi) in zip(m.source.coords, m.domain):
            v = pt[name]
            if not (lo < v < hi or (lo == 0 and v == 0 and m.source.is_boundary(name))):
                return False
        return True

    def _triple_overlap_errors(self, n: int):
        d = self._directed()
        out = []
        for (a, b), fs in d.items():
            for (b2, c), gs in d.items():
                if b2 != b or c == a:
                    continue
                for h in d.get((a, c), []):
                    for f in fs:
                        for g in gs:
                            worst = 0.0
                            hits = 0
                            for pt in f.samples(n, include_faces=False):
                                if not self._in_domain(h, pt):
                                    continue
                                mid = f(pt)
                                if not self._in_domain(g, mid):
                                    continue
                                hits += 1
                                p1, p2 = g(mid), h(pt)
                                worst = max(worst, max(abs(p1[k] - p2[k]) / max(1, abs(p2[k])) for k in p2))
                            if hits:
                                out.append((f"{a}->{b}->{c}", worst))
        return out

    # --- boundary
    def boundary_atlas(self) -> "Atlas":
        charts = []
        for c in self.charts.values():
            for i, x in enumerate(c.boundary_coords):
                coords = c.coords[:i] + c.coords[i + 1 :]
                box = c.box[:i] + c.box[i + 1 :]
                charts.append(Chart(f"{c.id}|{x}", coords, c.k - 1, box))
        cmap = {ch.id: ch for ch in charts}
        transitions = []
        for t in self.transitions:
            f = t.map
            for i, x in enumerate(f.source.boundary_coords):
                if x not in f.met_faces:
                    continue
                js = [j for j, fc in enumerate(f.factored) if not fc.zero and fc.exponents[i] > 0]
                if len(js) != 1:
                    continue
                j = js[0]
                xt = f.target.coords[j]
                s_chart, t_chart = cmap[f"{t.source}|{x}"], cmap[f"{t.target}|{xt}"]
                comps = [limit_at_face(f.components[l], x) for l in range(f.target.dimension) if l != j]
                dom = f.domain[:f.source.coords.index(x)] + f.domain[f.source.coords.index(x) + 1 :]
                fm = ChartedMap(s_chart, t_chart, comps, dom, name=f"{f.name}|{x}", order=f.order)
                inv = None
                if t.inverse is not None:
                    g = t.inverse
                    ii = g.source.coords.index(xt)
                    icomps = [limit_at_face(g.components[l], xt) for l in range(g.target.dimension)
                              if g.target.coords[l] != x]
                    idom = g.domain[:ii] + g.domain[ii + 1 :]
                    inv = ChartedMap(t_chart, s_chart, icomps, idom, name=f"{g.name}|{xt}", order=g.order)
                    fm.inverse = inv
                    inv.inverse = fm
                transitions.append(Transition(s_chart.id, t_chart.id, fm, inv))
        return Atlas(charts, transitions, name=f"d{self.name}")

    def boundary_report(self) -> dict:
        return {
            "components": len(self.boundary_components),
            "faces": {fid: [repr(l) for l in locs] for fid, locs in self.face_ids.items()},
            "with_faces": self.has_faces(),
        }

    # --- products
    def product(self, other: "Atlas") -> "Atlas":
        return product_atlas(self, other)


def _rename(chart: Chart, taken: set) -> dict:
    out = {}
    for c in chart.coords:
        new = c
        n = 2
        while new in taken:
            new = f"{c}_{n}"
            n += 1
        out[c] = new
    return out


def _product_chart(a: Chart, b: Chart, ren: dict) -> Chart:
    bc = [ren.get(c, c) for c in b.coords]
    coords = a.boundary_coords + tuple(bc[: b.k]) + a.interior_coords + tuple(bc[b.k :])
    box = a.box[: a.k] + b.box[: b.k] + a.box[a.k :] + b.box[b.k :]
    return Chart(f"{a.id}*{b.id}", coords, a.k + b.k, box)


def _product_map(fa: ChartedMap, fb: ChartedMap, src: Chart, tgt: Chart, ren_src: dict, ren_tgt: dict) -> ChartedMap:
    bsub = {c: var(ren_src[c], fb.source.is_boundary(c)) for c in fb.source.coords}
    comp_a = dict(zip(fa.target.coords, fa.components))
    comp_b = {ren_tgt[c]: substitute(e, bsub) for c, e in zip(fb.target.coords, fb.components)}
    comps = [comp_a[c] if c in comp_a else comp_b[c] for c in tgt.coords]
    dom_a = dict(zip(fa.source.coords, fa.domain))
    dom_b = {ren_src[c]: d for c, d in zip(fb.source.coords, fb.domain)}
    dom = [dom_a[c] if c in dom_a else dom_b[c] for c in src.coords]
    return ChartedMap(src, tgt, comps, dom, name=f"{fa.name}x{fb.name}", order=fa.order)


def product_atlas(a: Atlas, b: Atlas) -> Atlas:
    """Product atlas with charts ``U x V`` and product transitions."""
    charts, ren = {}, {}
    for ca in a.charts.values():
        for cb in b.charts.values():
            r = _rename(cb, set(ca.coords))
            ren[(ca.id, cb.id)] = r
            charts[(ca.id, cb.id)] = _product_chart(ca, cb, r)

    def moves(at: Atlas):
        out = [(c.id, c.id, ChartedMap.identity(c), ChartedMap.identity(c)) for c in at.charts.values()]
        out += [(t.source, t.target, t.map, t.inverse) for t in at.transitions]
        return out

    transitions = []
    for sa, ta, fa, ia in moves(a):
        for sb, tb, fb, ib in moves(b):
            if sa == ta and sb == tb and fa.name.startswith("id_") and fb.name.startswith("id_"):
                continue
            src, tgt = charts[(sa, sb)], charts[(ta, tb)]
            fm = _product_map(fa, fb, src, tgt, ren[(sa, sb)], ren[(ta, tb)])
            inv = None
            if ia is not None and ib is not None:
                inv = _product_map(ia, ib, tgt, src, ren[(ta, tb)], ren[(sa, sb)])
                fm.inverse, inv.inverse = inv, fm
            transitions.append(Transition(src.id, tgt.id, fm, inv))
    return Atlas(charts.values(), transitions, name=f"{a.name}x{b.name}")


def point_atlas(name: str = "pt") -> Atlas:
    return Atlas([Chart("pt", (), 0, ())], name=name)


def half_line(name: str = "H", coord: str = "x") -> Atlas:
    return Atlas([Chart(name, (coord,), 1, ((0.0, INF),))], name=name)


def interval_atlas(name: str = "I", coord: str = "x") -> Atlas:
    """``[0, 1]`` with one chart at each end, overlapping in the middle."""
    a = Chart(f"{name}0", (coord,), 1, ((0.0, 0.75),))
    b = Chart(f"{name}1", (coord,), 1, ((0.0, 0.75),))
    x = a.variable(coord)
    f = ChartedMap(a, b, [const(1) - x], [(0.25, 0.75)], name=f"{name}01")
    g = ChartedMap(b, a, [const(1) - b.variable(coord)], [(0.25, 0.75)], name=f"{name}10")
    f.inverse, g.inverse = g, f
    return Atlas([a, b], [Transition(a.id, b.id, f, g)], name=name)


def circle_atlas(name: str = "S", coord: str = "t") -> Atlas:
    """``R / Z`` with two arcs; the second overlap wraps around."""
    a = Chart(f"{name}a", (coord,), 0, ((-0.1, 0.6),))
    b = Chart(f"{name}b", (coord,), 0, ((0.4, 1.1),))
    t = a.variable(coord)
    tb = b.variable(coord)
    f1 = ChartedMap(a, b, [t], [(0.4, 0.6)], name=f"{name}ab")
    g1 = ChartedMap(b, a, [tb], [(0.4, 0.6)], name=f"{name}ba")
    f2 = ChartedMap(a, b, [t + const(1)], [(-0.1, 0.1)], name=f"{name}ab~")
    g2 = ChartedMap(b, a, [tb - const(1)], [(0.9, 1.1)], name=f"{name}ba~")
    f1.inverse, g1.inverse, f2.inverse, g2.inverse = g1, f1, g2, f2
    return Atlas([a, b], [Transition(a.id, b.id, f1, g1), Transition(a.id, b.id, f2, g2)], name=name)


def quotient_cylinder(alpha, name: str = "Q") -> Atlas:
    """``([0, inf) x R) / Z`` where ``n`` acts by ``(x, y) -> (x^(alpha^n), y + n)``.

    Two charts cover one period; the wrap-around overlap is ``x~ = x^alpha``,
    ``y~ = y + 1``.
    """
    alpha = Fraction(alpha)
    a = Chart(f"{name}a", ("x", "y"), 1, ((0.0, 2.0), (-0.1, 0.6)))
    b = Chart(f"{name}b", ("x", "y"), 1, ((0.0, 2.0), (0.4, 1.1)))
    xa, ya, xb, yb = a.variable("x"), a.variable("y"), b.variable("x"), b.variable("y")
    f1 = ChartedMap(a, b, [xa, ya], [(0.0, 2.0), (0.4, 0.6)], name="ab")
    g1 = ChartedMap(b, a, [xb, yb], [(0.0, 2.0), (0.4, 0.6)], name="ba")
    hi = float(2.0 ** float(alpha))
    f2 = ChartedMap(a, b, [power(xa, alpha), ya + const(1)], [(0.0, min(2.0, 2.0 ** float(1 / alpha))), (-0.1, 0.1)], name="wrap")
    g2 = ChartedMap(b, a, [power(xb, 1 / alpha), yb - const(1)], [(0.0, min(2.0, hi)), (0.9, 1.1)], name="unwrap")
    f1.inverse, g1.inverse, f2.inverse, g2.inverse = g1, f1, g2, f2
    return Atlas([a, b], [Transition(a.id, b.id, f1, g1), Transition(a.id, b.id, f2, g2)], name=name)
