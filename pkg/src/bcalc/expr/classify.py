"""Boundary smoothness classes of single expressions.

The verdict looks at every iterated b-derivative up to a fixed order and at
the leading behaviour of each one at each boundary face:

* a-smooth: the function has a limit at every face, and every iterated
  b-derivative that involves ``x d/dx`` for a face ``x`` is ``O(x^a)`` there
  for some ``a > 0``;
* r-smooth (not a-smooth): all b-derivatives extend continuously, but some
  derivative only decays logarithmically (or not at all);
* r-differentiable only: the function and its first b-derivatives extend
  continuously, a higher one does not;
* not r-differentiable: otherwise.

Only orders ``0..order`` are inspected, so the verdict is certified up to
that depth and no further.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Mapping, Sequence

from .asymptotics import LeadingBehavior, leading_behavior
from .calculus import b_derivative
from .nodes import BExpr
from .simplify import simplify

DEFAULT_ORDER = 6


class SmoothnessClass(enum.Enum):
    ASmooth = "a-smooth"
    RSmoothNotA = "r-smooth-not-a"
    RDifferentiableOnly = "r-differentiable-only"
    NotRDifferentiable = "not-r-differentiable"

    @property
    def rank(self) -> int:
        return {"a-smooth": 3, "r-smooth-not-a": 2, "r-differentiable-only": 1,
                "not-r-differentiable": 0}[self.value]

    def at_least(self, other: "SmoothnessClass") -> bool:
        return self.rank >= other.rank


@dataclass(frozen=True)
class LocalModel:
    """Coordinate names of a local model and sample values for non-face coordinates."""

    boundary: tuple = ()
    interior: tuple = ()
    sample: Mapping[str, float] = field(default_factory=dict)

    @classmethod
    def of(cls, e: BExpr, sample: Mapping[str, float] | None = None) -> "LocalModel":
        b = tuple(sorted(n for n, is_b in e.variables if is_b))
        i = tuple(sorted(n for n, is_b in e.variables if not is_b))
        return cls(b, i, dict(sample or {}))

    @property
    def variables(self) -> tuple:
        return self.boundary + self.interior


@dataclass
class Classification:
    verdict: SmoothnessClass
    order: int
    log_decay: bool
    witness: dict  # face -> [(derivative multi-index, alpha, log power)]
    reason: str = ""

    def to_json(self) -> dict:
        def fmt(a):
            return "inf" if a == float("inf") else str(a)

        return {
            "class": self.verdict.value,
            "certified_order": self.order,
            "log_decay": self.log_decay,
            "reason": self.reason,
            "witness": {f: [[",".join(ix) or "-", fmt(a), b] for ix, a, b in w] for f, w in self.witness.items()},
        }


def iterated_derivatives(e: BExpr, variables: Sequence[str], order: int):
    """Yield ``(multi_index, expression)`` for all b-derivatives up to ``order``."""
    cache = {(): simplify(e)}
    yield (), cache[()]
    for n in range(1, order + 1):
        for idx in combinations_with_replacement(variables, n):
            prev = cache[idx[:-1]]
            d = b_derivative(prev, idx[-1])
            cache[idx] = d
            yield idx, d


def classify_function(e: BExpr, domain: LocalModel | None = None, order: int = DEFAULT_ORDER) -> Classification:
    domain = domain or LocalModel.of(e)
    names = [n for n in domain.variables if n in e.var_names]
    witness: dict = {f: [] for f in domain.boundary}
    bad_low = bad_high = False
    no_power_decay = False
    log_decay = True
    reasons = []
    for idx, d in iterated_derivatives(e, names, order):
        level = len(idx)
        for face in domain.boundary:
            lb: LeadingBehavior = leading_behavior(d, face, domain.sample)
            witness[face].append((idx, lb.alpha, lb.log_power))
            if not lb.continuous:
                if level <= 1:
                    bad_low = True
                else:
                    bad_high = True
                reasons.append(f"b-derivative {','.join(idx) or '(none)'} has no limit at {face}=0")
            if face in idx:
                if not lb.power_decay:
                    no_power_decay = True
                    reasons.append(f"b-derivative {','.join(idx)} is not O({face}^a) for any a>0")
                if not lb.log_decay:
                    log_decay = False
    if bad_low:
        verdict = SmoothnessClass.NotRDifferentiable
    elif bad_high:
        verdict = SmoothnessClass.RDifferentiableOnly
    elif no_power_decay:
        verdict = SmoothnessClass.RSmoothNotA
    else:
        verdict = SmoothnessClass.ASmooth
    return Classification(verdict, order, log_decay and not (bad_low or bad_high), witness,
                          reasons[0] if reasons else "")
