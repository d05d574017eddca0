"""Weighted Fredholm analysis of b-operators on the interval, and b-cohomology of model spaces.

Operators are ``P = sum_j c_j v^j`` with ``v = x(1-x) d/dx``.  In the
cylinder coordinate ``t = log(x/(1-x))`` the field ``v`` is ``d/dt``, and a
weight ``(lam0, lam1)`` means growth ``x^lam0 (1-x)^lam1``.  Writing
``e = w u`` with ``w = x^lam0 (1-x)^lam1`` turns the weighted problem into
the unweighted one for ``P_lam = sum_j c_j (d/dt + g)^j`` with
``g = lam0 (1-x) - lam1 x``.

``P_lam`` is discretised by Chebyshev collocation on ``[-T, T]``.  At each
end the solution is required to lie in the span of modes of the limiting
constant-coefficient equation that decay towards that end, which makes the
truncation exact for the tails.  Kernel and cokernel dimensions are read
from singular values of the resulting rectangular matrix, measured as a map
from ``H^l`` to ``L^2``.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
import scipy.linalg
from scipy.special import comb, expit

from .errors import (
    DiscretizationUnstable,
    DomainError,
    Indeterminate,
    NotElliptic,
    NotFredholm,
)
from .expr import (
    BExpr,
    SmoothnessClass,
    b_derivative,
    bvar,
    classify_function,
    const,
    evaluate,
    simplify,
    substitute,
)
from .expr.classify import LocalModel

X = bvar("x")
SVD_RTOL = 1e-8
GAP_RATIO = 1e3
EXCLUDE_EPS = 1e-3
DEFAULT_T = 40.0
DEFAULT_N = 160
MAP_SCALE = 4.0
ROOT_TOL = 1e-9
FREDHOLM_TOL = 1e-9


def _at(e: BExpr, x: float) -> float:
    return evaluate(e, {"x": x})


def _v(c: BExpr) -> BExpr:
    """``x(1-x) dc/dx``."""
    return simplify(BExpr("*", (const(1) - X, b_derivative(c, "x"))))


@dataclass(frozen=True)
class BOperator1D:
    coeffs: tuple  # c_0 .. c_l

    @classmethod
    def from_strings(cls, coeffs: Sequence) -> "BOperator1D":
        from .expr import parse

        return cls(tuple(parse(c) if isinstance(c, str) else (c if isinstance(c, BExpr) else const(Fraction(c)))
                         for c in coeffs))

    @classmethod
    def from_manifest(cls, data: dict) -> "BOperator1D":
        op = cls.from_strings(data["coeffs"])
        if "order" in data and int(data["order"]) != op.order:
            raise NotElliptic(f"declared order {data['order']} but {op.order + 1} coefficients given")
        return op

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __str__(self):
        return " + ".join(f"({c}) v^{j}" for j, c in enumerate(self.coeffs))

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [str(c) for c in self.coeffs]}

    def check_elliptic(self) -> None:
        problem = _ellipticity_problem(self.coeffs)
        if problem:
            raise NotElliptic(problem)

    @property
    def elliptic(self) -> bool:
        try:
            self.check_elliptic()
        except NotElliptic:
            return False
        return True

    def boundary_values(self, face: int) -> list[float]:
        return [_at(c, float(face)) for c in self.coeffs]

    def adjoint(self) -> "BOperator1D":
        """Formal adjoint for the b-density ``dx / (x(1-x))``."""
        l = self.order
        out = []
        for k in range(l + 1):
            terms = []
            for j in range(k, l + 1):
                d = self.coeffs[j]
                for _ in range(j - k):
                    d = _v(d)
                coef = (-1) ** j * int(comb(j, k, exact=True))
                terms.append(BExpr("*", (const(coef), d)))
            out.append(simplify(BExpr("+", tuple(terms))) if len(terms) > 1 else simplify(terms[0]))
        return BOperator1D(tuple(out))


@functools.lru_cache(maxsize=256)
def _ellipticity_problem(coeffs: tuple, samples: int = 201) -> str | None:
    if len(coeffs) < 2:
        return "order must be at least 1"
    lead = coeffs[-1]
    vals = np.array([_at(lead, float(x)) for x in np.linspace(0.0, 1.0, samples)])
    if np.any(np.abs(vals) < 1e-12) or (vals.max() > 0 and vals.min() < 0):
        return f"leading coefficient {lead} vanishes on [0, 1]"
    for c in coeffs:
        for e in (c, substitute(c, {"x": const(1) - X})):
            if "x" in e.var_names:
                verdict = classify_function(e, LocalModel(("x",), (), {"x": 0.5})).verdict
                if verdict is not SmoothnessClass.ASmooth:
                    return f"coefficient {c} is {verdict.value}, not a-smooth"
    return None


def _poly_roots(coeffs: Sequence[float]) -> list[complex]:
    """Roots of ``sum_j coeffs[j] s^j`` (closed form up to degree 2)."""
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    if deg == 1:
        return [complex(-coeffs[0] / coeffs[1])]
    if deg == 2:
        c, b, a = coeffs
        disc = b * b - 4 * a * c
        if disc >= 0:
            r = math.sqrt(disc)
            # stable pair
            q = -0.5 * (b + math.copysign(r, b)) if b != 0 else 0.5 * r
            if q == 0:
                return [0j, 0j]
            return sorted([complex(q / a), complex(c / q)], key=lambda z: (z.real, z.imag))
        r = math.sqrt(-disc)
        return [complex(-b / (2 * a), -r / (2 * a)), complex(-b / (2 * a), r / (2 * a))]
    return sorted((complex(z) for z in np.roots(list(reversed(coeffs)))), key=lambda z: (z.real, z.imag))


def indicial_polynomial(P: BOperator1D, face: int) -> list[float]:
    """Coefficients of ``p(s)`` with ``P x^s ~ p(s) x^s`` at 0 and ``P (1-x)^s ~ p(s) (1-x)^s`` at 1."""
    vals = P.boundary_values(face)
    return [c * ((-1) ** j if face == 1 else 1) for j, c in enumerate(vals)]


def indicial_roots(P: BOperator1D, face: int) -> list[tuple[complex, int]]:
    """Roots of the indicial polynomial with multiplicities."""
    P.check_elliptic()
    roots = [complex(z.real + 0.0, z.imag + 0.0) for z in _poly_roots(indicial_polynomial(P, face))]
    out: list = []
    for z in roots:
        for k, (w, m) in enumerate(out):
            if abs(z - w) <= ROOT_TOL * max(1.0, abs(w)):
                out[k] = (w, m + 1)
                break
        else:
            out.append((z, 1))
    return out


def excluded_weights(P: BOperator1D) -> tuple[list[float], list[float]]:
    """Real parts of indicial roots at each face."""
    def reals(face):
        vals = []
        for z, _ in indicial_roots(P, face):
            r = 0.0 if abs(z.real) < ROOT_TOL else z.real
            if not any(abs(r - v) <= ROOT_TOL for v in vals):
                vals.append(r)
        return sorted(vals)

    return reals(0), reals(1)


def _cheb(N: int):
    """Chebyshev points (from +1 down to -1) and differentiation matrix."""
    k = np.arange(N + 1)
    s = np.cos(np.pi * k / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** k
    S = np.tile(s, (N + 1, 1)).T
    dS = S - S.T
    D = np.outer(c, 1.0 / c) / (dS + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return s, D


def _clencurt(N: int) -> np.ndarray:
    """Clenshaw-Curtis weights on the Chebyshev points."""
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = np.arange(1, N)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(N * theta[inner]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2 * v / N
    return w


def _decaying_complement(coeffs_mu: list[float], towards_minus: bool) -> np.ndarray:
    """Rows ``Z_c^T`` whose vanishing puts a jet in the decaying subspace.

    ``coeffs_mu`` are the coefficients of the characteristic polynomial in
    ``mu`` (solutions ``e^(mu t)``); towards ``-inf`` decay means
    ``Re mu > 0``, towards ``+inf`` it means ``Re mu < 0``.
    """
    l = len(coeffs_mu) - 1
    lead = coeffs_mu[-1]
    A = np.zeros((l, l))
    A[:-1, 1:] = np.eye(l - 1)
    A[-1, :] = -np.array(coeffs_mu[:-1]) / lead
    sort = (lambda re, im: re > 0) if towards_minus else (lambda re, im: re < 0)
    _, Z, sdim = scipy.linalg.schur(A, output="real", sort=sort)
    return Z[:, sdim:].T


def _shifted_poly(vals: list[float], shift: float) -> list[float]:
    """Coefficients in ``mu`` of ``sum_j vals[j] (mu + shift)^j``."""
    out = np.zeros(len(vals))
    for j, c in enumerate(vals):
        for k in range(j + 1):
            out[k] += c * comb(j, k) * shift ** (j - k)
    return list(out)


@dataclass
class WeightedSolution:
    ker: int
    coker: int
    lam: tuple
    N: int
    T: float
    singular_values: np.ndarray
    t: np.ndarray
    kernel_u: np.ndarray  # columns: kernel functions in the conjugated picture
    notes: list = field(default_factory=list)

    @property
    def index(self) -> int:
        return self.ker - self.coker

    def as_tuple(self) -> tuple:
        return self.ker, self.coker, self.index

    def kernel_functions(self) -> np.ndarray:
        """Kernel elements ``e = w u`` sampled at ``self.t``."""
        x = expit(self.t)
        w = x ** self.lam[0] * expit(-self.t) ** self.lam[1]
        return self.kernel_u * w[:, None]

    def to_json(self) -> dict:
        return {"lambda": [self.lam[0], self.lam[1]], "fredholm": True, "ker": self.ker,
                "coker": self.coker, "index": self.index, "N": self.N, "T": self.T}


class _Discretisation:
    def __init__(self, P: BOperator1D, lam: tuple, N: int, T: float):
        self.P, self.lam, self.N, self.T = P, lam, N, T
        s, D = _cheb(N)
        # sinh map clusters nodes where the coefficients vary (|t| of order MAP_SCALE)
        kappa = math.asinh(T / MAP_SCALE)
        self.t = T * np.sinh(kappa * s) / math.sinh(kappa)
        dt_ds = T * kappa * np.cosh(kappa * s) / math.sinh(kappa)
        self.D = D / dt_ds[:, None]
        self.wq = _clencurt(N) * dt_ds
        x = expit(self.t)
        one_minus = expit(-self.t)
        l = P.order
        self.C = [np.array([_at(c, float(xi)) for xi in x]) for c in P.coeffs]
        g = lam[0] * one_minus - lam[1] * x
        Dg = self.D + np.diag(g)
        n = N + 1
        L = np.zeros((n, n))
        Pw = np.eye(n)
        for j in range(l + 1):
            L += self.C[j][:, None] * Pw
            Pw = Dg @ Pw
        # drop l collocation rows next to the ends, ceil(l/2) at -T
        lo_drop, hi_drop = (l + 1) // 2, l // 2
        keep = np.arange(hi_drop, n - lo_drop)
        sq = np.sqrt(self.wq)
        rows = [sq[keep, None] * L[keep]]
        jets = [np.eye(n)]
        for _ in range(1, l):
            jets.append(self.D @ jets[-1])
        c0, c1 = P.boundary_values(0), P.boundary_values(1)
        Zm = _decaying_complement(_shifted_poly(c0, lam[0]), towards_minus=True)
        Zp = _decaying_complement(_shifted_poly(c1, -lam[1]), towards_minus=False)
        jet_minus = np.array([J[n - 1] for J in jets])  # t = -T is the last node
        jet_plus = np.array([J[0] for J in jets])
        if len(Zm):
            rows.append(Zm @ jet_minus)
        if len(Zp):
            rows.append(Zp @ jet_plus)
        self.M = np.vstack(rows)
        # H^l norm on the unknowns
        K = np.vstack([sq[:, None] * np.linalg.matrix_power(self.D, j) for j in range(l + 1)])
        self.R = np.linalg.qr(K, mode="r")

    def solve(self) -> WeightedSolution:
        A = scipy.linalg.solve_triangular(self.R, self.M.T, trans="T").T  # M R^-1
        U, s, Vh = np.linalg.svd(A, full_matrices=True)
        thr = SVD_RTOL * s[0]
        rank = int(np.sum(s > thr))
        notes = []
        if rank < len(s):
            gap = s[rank - 1] / max(s[rank], 1e-300) if rank > 0 else np.inf
            if gap < GAP_RATIO:
                raise DiscretizationUnstable(
                    f"no spectral gap at the kernel threshold (ratio {gap:.3g}) for weight {self.lam}")
        elif len(s) and s[-1] < GAP_RATIO * thr:
            notes.append(f"smallest singular value {s[-1]:.3g} within 1e3 of the threshold")
        n = self.M.shape[1]
        ker = n - rank
        coker = self.M.shape[0] - rank
        null = Vh[rank:].T
        u = scipy.linalg.solve_triangular(self.R, null) if ker else np.zeros((n, 0))
        return WeightedSolution(ker, coker, tuple(self.lam), self.N, self.T, s, self.t, u, notes)


def _as_pair(lam) -> tuple:
    if isinstance(lam, (int, float, Fraction)):
        return float(lam), float(lam)
    a, b = lam
    return float(a), float(b)


def solve_weighted(P: BOperator1D, lam, N: int = DEFAULT_N, T: float = DEFAULT_T) -> WeightedSolution:
    """Kernel, cokernel and index of ``P`` between weighted spaces of weight ``lam``."""
    P.check_elliptic()
    lam = _as_pair(lam)
    d0, d1 = excluded_weights(P)
    for face, D in ((0, d0), (1, d1)):
        for r in D:
            if abs(lam[face] - r) <= FREDHOLM_TOL:
                raise NotFredholm(f"weight {lam[face]} at face {face} is an excluded weight")
    return _Discretisation(P, lam, N, T).solve()


def kernel_residual(P: BOperator1D, e_values: np.ndarray, t: np.ndarray, lam, N: int, T: float) -> float:
    """Relative residual of a function (sampled on the same grid) inside the weighted problem at ``lam``."""
    lam = _as_pair(lam)
    disc = _Discretisation(P, lam, N, T)
    x = expit(t)
    w = x ** lam[0] * expit(-t) ** lam[1]
    u = e_values / w
    z = disc.R @ u
    return float(np.linalg.norm(disc.M @ u) / np.linalg.norm(z))


@dataclass
class SweepPoint:
    lam: float
    fredholm: bool
    ker: int | None
    coker: int | None

    @property
    def index(self):
        return None if self.ker is None else self.ker - self.coker


@dataclass
class WeightSweepReport:
    operator: dict
    points: list
    excluded: dict  # face -> list of real parts
    jumps: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "fredholm", "ker", "coker", "index"])
        for p in self.points:
            w.writerow([repr(p.lam), p.fredholm, p.ker, p.coker, p.index])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"operator": self.operator,
                "excluded": {str(k): v for k, v in self.excluded.items()},
                "points": [{"lambda": p.lam, "fredholm": p.fredholm, "ker": p.ker, "coker": p.coker,
                            "index": p.index} for p in self.points],
                "jumps": self.jumps}


def _multiplicity_between(P: BOperator1D, a: float, b: float) -> int:
    total = 0
    for face in (0, 1):
        for z, m in indicial_roots(P, face):
            if a < z.real < b:
                total += m
    return total


def weight_sweep(P: BOperator1D, lo: float, hi: float, steps: int, N: int = DEFAULT_N,
                 T: float = DEFAULT_T) -> WeightSweepReport:
    """Index of ``P`` along ``lam0 = lam1 = lam`` on a uniform grid; grid points near excluded weights move by 1e-3."""
    P.check_elliptic()
    d0, d1 = excluded_weights(P)
    report = WeightSweepReport(P.to_json(), [], {0: d0, 1: d1})
    if steps <= 0 or hi < lo:
        return report
    grid = [lo] if steps == 1 else list(np.linspace(lo, hi, steps))
    D = sorted(set(d0) | set(d1))
    for lam in grid:
        lam = float(lam)
        for r in D:
            if abs(lam - r) < EXCLUDE_EPS:
                lam = r + EXCLUDE_EPS if lam >= r else r - EXCLUDE_EPS
        sol = solve_weighted(P, lam, N, T)
        report.points.append(SweepPoint(lam, True, sol.ker, sol.coker))
    for p, q in zip(report.points, report.points[1:]):
        if p.index != q.index:
            report.jumps.append({"from": p.lam, "to": q.lam, "index_change": q.index - p.index,
                                 "roots_crossed": _multiplicity_between(P, p.lam, q.lam)})
    return report


def locate_jump(P: BOperator1D, lo: float, hi: float, tol: float = 1e-4, N: int = DEFAULT_N,
                T: float = DEFAULT_T) -> float:
    """Bisect between two weights of different index until the bracket is narrower than ``tol``.

    Uses only the computed index, never the indicial roots; landing on an excluded weight ends the search there.
    """
    index_lo = solve_weighted(P, lo, N, T).index
    if index_lo == solve_weighted(P, hi, N, T).index:
        raise DomainError(f"index does not change between {lo} and {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            index_mid = solve_weighted(P, mid, N, T).index
        except NotFredholm:
            return mid
        if index_mid == index_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- b-de Rham cohomology of model spaces

INTERVAL_FUNCTION_BASIS = ("1", "x", "(pow x 2)", "(pow x 1/2)", "(pow (- 2 x) 1/2)", "(pow x 3)",
                           "(exp x)", "(pow (+ 1 x) -1)")


@dataclass
class IntervalCohomology:
    h0: int
    h1: int
    kernel_rank: int
    functional_rank: int

    def as_tuple(self) -> tuple:
        return self.h0, self.h1


def b_one_form_class(c_prime: BExpr) -> tuple[float, float]:
    """Class of ``c'(x) dx / (x(1-x))`` in the degree-one group: ``(c'(0), c'(1))``."""
    return _at(c_prime, 0.0), _at(c_prime, 1.0)


def exact_primitive(c_prime: BExpr, x: float, dps: int = 30):
    """``c(x) = int_{1/2}^x c'(t) / (t(1-t)) dt``; needs ``c'(0) = c'(1) = 0``."""
    a0, a1 = b_one_form_class(c_prime)
    if abs(a0) > 1e-14 or abs(a1) > 1e-14:
        raise DomainError(f"the form is not exact: class ({a0}, {a1})")
    with mpmath.workdps(dps):
        f = lambda t: mpmath.mpf(_at(c_prime, float(t))) / (t * (1 - t))
        return float(mpmath.quad(f, [mpmath.mpf(1) / 2, mpmath.mpf(x)]))


def bdr_interval(basis: Sequence[str] = INTERVAL_FUNCTION_BASIS, samples: int = 41) -> IntervalCohomology:
    """b-de Rham cohomology dimensions of the closed interval.

    Degree 0: kernel of ``v`` on a sampled basis of a-smooth functions.
    Degree 1: rank of ``c' -> (c'(0), c'(1))`` on the same basis; every
    ``v c`` lies in its kernel and every form in its kernel is exact.
    """
    from .expr import parse

    fns = [parse(b) for b in basis]
    xs = np.linspace(0.0, 1.0, samples)
    V = np.array([[_at(_v(f), float(x)) for f in fns] for x in xs])
    sv = np.linalg.svd(V, compute_uv=False)
    rank_v = int(np.sum(sv > SVD_RTOL * sv[0]))
    sf = np.linalg.svd(np.array([[_at(f, float(x)) for f in fns] for x in xs]), compute_uv=False)
    h0 = int(np.sum(sf > SVD_RTOL * sf[0])) - rank_v
    Phi = np.array([b_one_form_class(f) for f in fns]).T
    sp = np.linalg.svd(Phi, compute_uv=False)
    rank_phi = int(np.sum(sp > SVD_RTOL * sp[0]))
    if np.max(np.abs(V[[0, -1]])) > 1e-12:
        raise Indeterminate("an exact form does not vanish at the ends")
    return IntervalCohomology(h0, rank_phi, rank_v, rank_phi)


def twisted_circle_operator(h: float, N: int = 65) -> np.ndarray:
    """Spectral discretisation of ``d/dtheta - log(h)/(2 pi)`` on periodic functions."""
    if h <= 0:
        raise DomainError(f"holonomy must be positive, got {h}")
    if N % 2 == 0:
        N += 1  # odd size avoids the Nyquist mode
    a = math.log(h) / (2 * math.pi)
    k = np.fft.fftfreq(N, d=1.0 / N)
    theta = 2 * np.pi * np.arange(N) / N
    F = np.exp(-1j * np.outer(k, theta)) / math.sqrt(N)
    D = F.conj().T @ np.diag(1j * k) @ F
    return D.real - a * np.eye(N)


def twisted_circle_cohomology(h: float, N: int = 65) -> tuple[int, int]:
    """Cohomology of the circle with coefficients in the flat line bundle of holonomy ``h``.

    Parallel sections are the kernel of the twisted derivative, the
    degree-one group its cokernel.
    """
    M = twisted_circle_operator(h, N)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > SVD_RTOL * max(s[0], 1.0)))
    return M.shape[1] - rank, M.shape[0] - rank


@dataclass
class PredictedCohomology:
    dims: tuple
    prediction: bool = True
    ingredients: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"dims": list(self.dims), "prediction": self.prediction, "ingredients": self.ingredients}


def les_dimensions(h_X: Sequence[int], h_twisted: Sequence[int], top: int) -> tuple:
    """Dimensions from ``H^l(X) -> bH^l -> H^(l-1)(dX, twisted) -> H^(l+1)(X)``.

    Only resolved when every connecting map has a zero source or target.
    """
    def hx(l):
        return h_X[l] if 0 <= l < len(h_X) else 0

    def ht(l):
        return h_twisted[l] if 0 <= l < len(h_twisted) else 0

    out = []
    for l in range(top + 1):
        for src, tgt in ((ht(l - 1), hx(l + 1)), (ht(l - 2), hx(l))):
            if src and tgt:
                raise Indeterminate(f"connecting map in degree {l} is not forced to vanish")
        out.append(hx(l) + ht(l - 1))
    return tuple(out)


def predicted_quotient_cohomology(alpha: float) -> PredictedCohomology:
    """Expected b-de Rham dimensions of the quotient cylinder with twist ``alpha``."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    h_X = (1, 1, 0)
    tw = twisted_circle_cohomology(float(alpha))
    dims = les_dimensions(h_X, tw, 2)
    return PredictedCohomology(dims, True, {"cylinder": list(h_X), "twisted_boundary": list(tw)})
