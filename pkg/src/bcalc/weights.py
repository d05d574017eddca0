"""Boundary holonomy, weights and the line bundles they define.

Near a boundary face the b-normal line is spanned by ``x d/dx``.  A
transition ``x~ = F * x^a`` rescales constant sections by the exponent
``a``, so going once around a boundary component multiplies them by the
product of the exponents met on the way: that product is the holonomy.
Components with holonomy 1 are untwisted and carry a real weight; twisted
components only admit the weight 0.

Weights pull back along interior maps by ``lambda_i = sum_j a_ij mu_j`` and,
for b-normal maps, push forward to the largest ``mu`` whose pullback stays
below ``lambda``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .atlas import Atlas, ChartedMap, LocalFace, Transition, UnionFind
from .errors import NotADiffeo, NotBNormal, NotInterior, PositivityViolated, WeightInconsistent
from .expr import BExpr, evaluate, power, simplify, const
from .expr.nodes import BExpr as _B

COCYCLE_TOL = 1e-10


def fmt_rational(q) -> str:
    if isinstance(q, float) and math.isinf(q):
        return "inf" if q > 0 else "-inf"
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(s) -> Fraction:
    if isinstance(s, Fraction):
        return s
    if isinstance(s, float):
        return Fraction(s).limit_denominator(10**9)
    return Fraction(str(s).strip())


@dataclass
class ComponentHolonomy:
    face: str
    holonomy: Fraction
    cycle: list
    cycles: int = 0

    @property
    def twisted(self) -> bool:
        return self.holonomy != 1


@dataclass
class HolonomyReport:
    components: dict  # face id -> ComponentHolonomy

    def __getitem__(self, face):
        return self.components[face]

    @property
    def twisted_faces(self) -> list:
        return [f for f, c in self.components.items() if c.twisted]

    @property
    def untwisted_faces(self) -> list:
        return [f for f, c in self.components.items() if not c.twisted]

    def to_json(self) -> dict:
        return {f: {"holonomy": fmt_rational(c.holonomy), "twisted": c.twisted,
                    "cycle": c.cycle, "independent_cycles": c.cycles}
                for f, c in self.components.items()}


def _face_edges(atlas: Atlas, t: Transition, check: bool):
    f = t.map
    out = []
    for i, x in enumerate(f.source.boundary_coords):
        if x not in f.met_faces:
            continue
        js = [j for j, fc in enumerate(f.factored) if not fc.zero and fc.exponents[i] > 0]
        if not js:
            continue
        if check and (len(js) != 1 or not f.flags.diffeomorphism):
            raise NotADiffeo(f"transition {f.name or t.source + '->' + t.target} is not a diffeomorphism")
        j = js[0]
        out.append((LocalFace(t.source, x), LocalFace(t.target, f.target.coords[j]),
                    f.factored[j].exponents[i], f.name or f"{t.source}->{t.target}"))
    return out


def boundary_holonomy(atlas: Atlas, check_diffeo: bool = True) -> HolonomyReport:
    """Holonomy of constant b-normal sections around each boundary component.

    Along a transition ``x~ = F x^a`` a constant section picks up the factor
    ``a``; the holonomy is the product of these factors around a cycle, read
    in the declared direction of the transition that closes the cycle.
    """
    edges = []
    for t in atlas.transitions:
        edges.extend(_face_edges(atlas, t, check_diffeo))
    # untwisting edges first so that a twist sits on the closing edge
    order = sorted(range(len(edges)), key=lambda k: (edges[k][2] != 1, k))
    comps = {}
    for fid, locs in atlas.face_ids.items():
        members = set(locs)
        mine = [edges[k] for k in order if edges[k][0] in members]
        uf = UnionFind(members)
        tree, closing = [], []
        for e in mine:
            if uf.find(e[0]) != uf.find(e[1]):
                uf.union(e[0], e[1])
                tree.append(e)
            else:
                closing.append(e)
        adj: dict = {m: [] for m in members}
        for u, v, a, name in tree:
            adj[u].append((v, Fraction(a), name))
            adj[v].append((u, 1 / Fraction(a), name + "^-1"))
        root = min(members, key=repr)
        pot, parent = {root: Fraction(1)}, {root: None}
        stack = [root]
        while stack:
            u = stack.pop()
            for v, a, name in adj[u]:
                if v not in pot:
                    pot[v] = pot[u] * a
                    parent[v] = (u, name)
                    stack.append(v)
        hol, cycle = Fraction(1), []
        for u, v, a, name in closing:
            h = pot[u] * Fraction(a) / pot[v]
            if h != 1:
                hol = h
                cycle = _path(parent, v, u) + [name]
                break
        if not cycle and closing:
            u, v, a, name = closing[0]
            cycle = _path(parent, v, u) + [name]
        comps[fid] = ComponentHolonomy(fid, hol, cycle, len(closing))
    return HolonomyReport(comps)


def _path(parent: dict, start, end) -> list:
    """Names of tree edges from ``start`` to ``end`` via their common ancestor."""
    def chain(n):
        out = [n]
        while parent[n] is not None:
            n = parent[n][0]
            out.append(n)
        return out

    cs, ce = chain(start), chain(end)
    common = next(n for n in cs if n in set(ce))
    names = []
    n = start
    while n != common:
        names.append(parent[n][1] + "^-1")
        n = parent[n][0]
    tail = []
    n = end
    while n != common:
        tail.append(parent[n][1])
        n = parent[n][0]
    return names + tail[::-1]


@dataclass
class WeightSpace:
    faces: list
    untwisted: list
    twisted: list

    @property
    def dimension(self) -> int:
        return len(self.untwisted)

    def to_json(self) -> dict:
        return {"dimension": self.dimension, "basis": self.untwisted, "twisted": self.twisted}


def weight_space(atlas: Atlas, holonomy: HolonomyReport | None = None) -> WeightSpace:
    holonomy = holonomy or boundary_holonomy(atlas)
    faces = list(atlas.face_ids)
    return WeightSpace(faces, holonomy.untwisted_faces, holonomy.twisted_faces)


@dataclass
class Weight:
    """Rational weight per boundary face; twisted faces carry 0."""

    values: dict
    notes: list = field(default_factory=list)

    def __getitem__(self, face):
        return self.values[face]

    def to_json(self) -> dict:
        return {f: fmt_rational(v) for f, v in sorted(self.values.items())}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Weight":
        return cls({k: parse_rational(v) for k, v in json.loads(text).items()})

    @classmethod
    def on_atlas(cls, atlas: Atlas, values: Mapping, holonomy: HolonomyReport | None = None) -> "Weight":
        holonomy = holonomy or boundary_holonomy(atlas)
        out, notes = {}, []
        for fid in atlas.face_ids:
            v = parse_rational(values.get(fid, 0))
            if fid in holonomy.twisted_faces and v != 0:
                notes.append(f"face {fid} is twisted (holonomy {fmt_rational(holonomy[fid].holonomy)}); weight set to 0")
                v = Fraction(0)
            out[fid] = v
        unknown = set(values) - set(out)
        if unknown:
            raise WeightInconsistent(f"weights given for unknown faces {sorted(unknown)}")
        return cls(out, notes)


def _exponents(f: ChartedMap):
    if not f.flags.interior:
        raise NotInterior(f"{f.name or 'map'} is not interior")
    return f.exponent_matrix


def pullback_weight(f: ChartedMap, lam: Mapping, source_faces: Mapping | None = None,
                    target_faces: Mapping | None = None) -> dict:
    """``(f* lam)_i = sum_j a_ij lam_j``.

    ``lam`` is keyed by target face ids; ``target_faces`` maps target boundary
    coordinates to those ids and ``source_faces`` does the same on the source
    (both default to the coordinate names).
    """
    A = _exponents(f)
    tf = [target_faces.get(c, c) if target_faces else c for c in f.target.boundary_coords]
    sf = [source_faces.get(c, c) if source_faces else c for c in f.source.boundary_coords]
    out: dict = {}
    for i, face in enumerate(sf):
        val = sum((A[i][j] * parse_rational(lam[tf[j]]) for j in range(len(tf))), Fraction(0))
        if face in out and out[face] != val:
            raise WeightInconsistent(f"source face {face} receives two different weights")
        out[face] = val
    return out


def pushforward_weight(f: ChartedMap, lam: Mapping, source_faces: Mapping | None = None,
                       target_faces: Mapping | None = None) -> dict:
    """Largest ``mu`` with ``f* mu <= lam``, for b-normal ``f``.

    Each source row has at most one positive exponent, so the constraints
    separate and ``mu_j = min { lam_i / a_ij : a_ij > 0 }``.  Source faces that
    map into the interior of the target must have ``lam_i > 0``.
    """
    A = _exponents(f)
    if not f.flags.b_normal:
        raise NotBNormal(f"{f.name or 'map'} is not b-normal; the separable formula does not apply")
    tf = [target_faces.get(c, c) if target_faces else c for c in f.target.boundary_coords]
    sf = [source_faces.get(c, c) if source_faces else c for c in f.source.boundary_coords]
    mu: dict = {face: math.inf for face in tf}
    for i, face in enumerate(sf):
        li = parse_rational(lam[face])
        pos = [j for j in range(len(tf)) if A[i][j] > 0]
        if not pos:
            if li <= 0:
                raise PositivityViolated(f"face {face} maps to the interior and needs a positive weight, got {li}")
            continue
        j = pos[0]
        cand = li / A[i][j]
        if cand < mu[tf[j]]:
            mu[tf[j]] = cand
    return mu


def is_feasible(f: ChartedMap, mu: Mapping, lam: Mapping, **kw) -> bool:
    pulled = pullback_weight(f, {k: (v if v != math.inf else 0) for k, v in mu.items()}, **kw)
    return all(pulled[k] <= parse_rational(lam[k]) for k in pulled)


@dataclass
class LineBundleTransition:
    source: str
    target: str
    name: str
    cocycle: BExpr
    exponents: dict  # source boundary coordinate -> exponent of x_i in the cocycle

    def to_json(self) -> dict:
        return {"source": self.source, "target": self.target, "transition": self.name,
                "cocycle": str(self.cocycle),
                "boundary_exponents": {k: fmt_rational(v) for k, v in self.exponents.items()}}


def _local_weights(atlas: Atlas, chart: str, weight: Weight) -> dict:
    c = atlas.charts[chart]
    return {x: weight.values.get(atlas.face_of(chart, x), Fraction(0)) for x in c.boundary_coords}


def l_lambda_transitions(atlas: Atlas, weight: Weight | Mapping, check_triples: bool = True) -> list:
    """Transition functions ``e_V = c * e_U`` of the line bundle of weight ``lambda``.

    ``c = prod_j F_j^(lam~_j) * prod_i x_i^(sum_j a_ij lam~_j - lam_i)``.  On a
    face met by the overlap the power of ``x_i`` must vanish, otherwise the
    weight is inconsistent with the transition.
    """
    if not isinstance(weight, Weight):
        weight = Weight.on_atlas(atlas, weight)
    out = []
    for t in atlas.transitions:
        f = t.map
        lam = _local_weights(atlas, t.source, weight)
        lam_t = _local_weights(atlas, t.target, weight)
        factors = []
        exps = {}
        for j, xt in enumerate(f.target.boundary_coords):
            fc = f.factored[j]
            if fc.zero:
                raise NotInterior(f"transition {f.name} has a vanishing component")
            if lam_t[xt] != 0:
                factors.append(power(fc.factor, lam_t[xt]))
        for i, x in enumerate(f.source.boundary_coords):
            e = sum((f.factored[j].exponents[i] * lam_t[xt] for j, xt in enumerate(f.target.boundary_coords)),
                    Fraction(0)) - lam[x]
            if x in f.met_faces and e != 0:
                raise WeightInconsistent(
                    f"transition {f.name}: weight {fmt_rational(lam[x])} on {t.source}.{x} does not match "
                    f"{fmt_rational(e + lam[x])} carried over from {t.target}")
            exps[x] = e
            if e != 0:
                factors.append(power(f.source.variable(x), e))
        cocycle = simplify(_B("*", tuple(factors))) if len(factors) > 1 else (
            simplify(factors[0]) if factors else const(1))
        out.append(LineBundleTransition(t.source, t.target, f.name, cocycle, exps))
    if check_triples:
        err = cocycle_error(atlas, out)
        if err > COCYCLE_TOL:
            raise WeightInconsistent(f"cocycle condition fails on a triple overlap (error {err:.3g})")
    return out


def cocycle_error(atlas: Atlas, cocycles: Sequence[LineBundleTransition], n: int = 32) -> float:
    """Largest relative defect of ``c_AC = c_BC(f_AB) * c_AB`` on sampled triple overlaps."""
    by_pair: dict = {}
    for t, c in zip(atlas.transitions, cocycles):
        by_pair.setdefault((t.source, t.target), []).append((t, c))
    worst = 0.0
    for (a, b), abs_ in by_pair.items():
        for (b2, cc), bcs in by_pair.items():
            if b2 != b or cc == a:
                continue
            for tac, cac in by_pair.get((a, cc), []):
                for tab, cab in abs_:
                    for tbc, cbc in bcs:
                        for pt in tab.map.samples(n, include_faces=False):
                            if not (Atlas._in_domain(tac.map, pt)):
                                continue
                            mid = tab.map(pt)
                            if not Atlas._in_domain(tbc.map, mid):
                                continue
                            lhs = evaluate(cac.cocycle, pt)
                            rhs = evaluate(cbc.cocycle, mid) * evaluate(cab.cocycle, pt)
                            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst
