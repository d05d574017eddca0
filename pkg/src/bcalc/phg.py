"""Index sets of polyhomogeneous expansions and how maps transform them.

An index set lists the pairs ``(alpha, b)`` of terms ``x^alpha (log x)^b``
allowed at a boundary face.  Sets are kept finite by discarding exponents
above ``alpha_max``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .atlas import ChartedMap
from .errors import NotBNormal, PositivityViolated
from .weights import fmt_rational, parse_rational

ALPHA_MAX = Fraction(10)


@dataclass(frozen=True)
class IndexSet:
    pairs: frozenset
    alpha_max: Fraction = ALPHA_MAX

    def __init__(self, pairs: Iterable = (), alpha_max=ALPHA_MAX):
        amax = Fraction(alpha_max)
        clean = set()
        for a, b in pairs:
            a, b = parse_rational(a), int(b)
            if b < 0:
                raise ValueError("log powers are nonnegative")
            if a <= amax:
                clean.add((a, b))
        object.__setattr__(self, "pairs", frozenset(clean))
        object.__setattr__(self, "alpha_max", amax)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return (Fraction(pair[0]), int(pair[1])) in self.pairs

    def __le__(self, other: "IndexSet"):
        return self.pairs <= other.pairs

    @property
    def empty(self) -> bool:
        return not self.pairs

    @property
    def min_exponent(self):
        return min(a for a, _ in self.pairs) if self.pairs else None

    def leading(self) -> tuple | None:
        """Pair with the smallest exponent and, among those, the largest log power."""
        if not self.pairs:
            return None
        mu = self.min_exponent
        return mu, max(b for a, b in self.pairs if a == mu)

    def union(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(self.pairs | other.pairs, min(self.alpha_max, other.alpha_max))

    def extended_union(self, other: "IndexSet") -> "IndexSet":
        """Union plus ``(alpha, b1 + b2 + 1)`` wherever both sets share an exponent."""
        extra = {(a1, b1 + b2 + 1) for a1, b1 in self.pairs for a2, b2 in other.pairs if a1 == a2}
        return IndexSet(self.pairs | other.pairs | extra, min(self.alpha_max, other.alpha_max))

    def scaled(self, c) -> "IndexSet":
        c = Fraction(c)
        return IndexSet(((a * c, b) for a, b in self.pairs), self.alpha_max)

    def to_json(self) -> list:
        return [[fmt_rational(a), b] for a, b in self]

    @classmethod
    def from_json(cls, data, alpha_max=ALPHA_MAX) -> "IndexSet":
        return cls(((parse_rational(a), int(b)) for a, b in data), alpha_max)


def sets_to_json(sets: Mapping[str, IndexSet]) -> dict:
    return {k: v.to_json() for k, v in sorted(sets.items())}


def sets_from_json(text_or_data, alpha_max=ALPHA_MAX) -> dict:
    data = json.loads(text_or_data) if isinstance(text_or_data, str) else text_or_data
    return {k: IndexSet.from_json(v, alpha_max) for k, v in data.items()}


def pullback_index(A: Sequence[Sequence], target_sets: Sequence[IndexSet],
                   alpha_max=ALPHA_MAX) -> list[IndexSet]:
    """Index sets at the source faces of a pulled-back expansion.

    ``A[i][j]`` is the exponent of source face ``i`` in target component ``j``.
    Face ``i`` collects ``(sum_j a_ij alpha_j, sum_j b_j)`` over one pair per
    target face with ``a_ij > 0``.
    """
    out = []
    for row in A:
        js = [j for j, a in enumerate(row) if a > 0]
        if not js:
            out.append(IndexSet((), alpha_max))
            continue
        pairs = set()
        for choice in itertools.product(*(sorted(target_sets[j].pairs) for j in js)):
            a = sum((Fraction(row[j]) * p[0] for j, p in zip(js, choice)), Fraction(0))
            b = sum(p[1] for p in choice)
            pairs.add((a, b))
        out.append(IndexSet(pairs, alpha_max))
    return out


def pushforward_index(A: Sequence[Sequence], source_sets: Sequence[IndexSet],
                      alpha_max=ALPHA_MAX) -> list[IndexSet]:
    """Index sets at the target faces after integrating a b-density along the fibres.

    Requires at most one positive entry per row.  Source faces mapping into
    the interior of the target need positive exponents (integrability); the
    others push their pairs forward by ``alpha / a_ij`` and are combined with
    the extended union.
    """
    n_target = len(A[0]) if A else 0
    for i, row in enumerate(A):
        pos = [j for j, a in enumerate(row) if a > 0]
        if len(pos) > 1:
            raise NotBNormal(f"source face {i} meets {len(pos)} target faces")
        if not pos:
            bad = [p for p in source_sets[i].pairs if p[0] <= 0]
            if bad:
                raise PositivityViolated(
                    f"source face {i} maps to the interior but carries exponent {fmt_rational(min(bad)[0])} <= 0")
    out = []
    for j in range(n_target):
        acc = None
        for i, row in enumerate(A):
            if row[j] > 0:
                pushed = source_sets[i].scaled(1 / Fraction(row[j]))
                acc = pushed if acc is None else acc.extended_union(pushed)
        out.append(acc if acc is not None else IndexSet((), alpha_max))
    return [IndexSet(s.pairs, alpha_max) for s in out]


def _face_names(f: ChartedMap, names: Mapping | None, coords) -> list:
    return [names.get(c, c) if names else c for c in coords]


def pullback_index_map(f: ChartedMap, target_sets: Mapping[str, IndexSet], alpha_max=ALPHA_MAX,
                       source_faces: Mapping | None = None, target_faces: Mapping | None = None) -> dict:
    tf = _face_names(f, target_faces, f.target.boundary_coords)
    sf = _face_names(f, source_faces, f.source.boundary_coords)
    res = pullback_index(f.exponent_matrix, [target_sets[t] for t in tf], alpha_max)
    return dict(zip(sf, res))


def pushforward_index_map(f: ChartedMap, source_sets: Mapping[str, IndexSet], alpha_max=ALPHA_MAX,
                          source_faces: Mapping | None = None, target_faces: Mapping | None = None) -> dict:
    if not f.flags.b_normal:
        raise NotBNormal(f"{f.name or 'map'} is not b-normal")
    tf = _face_names(f, target_faces, f.target.boundary_coords)
    sf = _face_names(f, source_faces, f.source.boundary_coords)
    res = pushforward_index(f.exponent_matrix, [source_sets[s] for s in sf], alpha_max)
    return dict(zip(tf, res))


def phg_to_weight_bound(S: IndexSet, lam) -> bool:
    """True iff every pair has ``alpha > lam``, or ``alpha == lam`` with no log."""
    lam = parse_rational(lam)
    return all((a == lam and b == 0) or a > lam for a, b in S.pairs)
