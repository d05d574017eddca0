import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcalc.atlas import (
    Atlas,
    Chart,
    ChartedMap,
    Transition,
    interval_atlas,
    product_atlas,
    quotient_cylinder,
)
from bcalc.errors import NotBNormal, NotInterior, PositivityViolated, WeightInconsistent
from bcalc.expr import equivalent, is_zero
from bcalc.weights import (
    Weight,
    boundary_holonomy,
    l_lambda_transitions,
    pullback_weight,
    pushforward_weight,
    weight_space,
)

P2 = Chart.model("P2", ["x", "y"])
H = Chart.model("H", ["t"])


def ring_cylinder(exponents):
    """Cylinder cut into ``len(exponents)`` charts; overlap ``i`` rescales ``x -> x^a_i``."""
    n = len(exponents)
    charts = [Chart(f"R{i}", ("x", "y"), 1, ((0.0, 2.0), (i / n - 0.1, (i + 1) / n + 0.1))) for i in range(n)]
    transitions = []
    for i, a in enumerate(exponents):
        a = Fraction(a)
        src, tgt = charts[i], charts[(i + 1) % n]
        shift = 1 if i == n - 1 else 0
        x, y = src.variable("x"), src.variable("y")
        xt, yt = tgt.variable("x"), tgt.variable("y")
        lo = (i + 1) / n - 0.1
        xdom = (0.0, min(2.0, 2.0 ** float(1 / a)))
        f = ChartedMap(src, tgt, [x ** a, y - shift], [xdom, (lo, lo + 0.2)], name=f"r{i}")
        g = ChartedMap(tgt, src, [xt ** (1 / a), yt + shift],
                       [(0.0, min(2.0, 2.0 ** float(a))), (lo - shift, lo - shift + 0.2)], name=f"r{i}^")
        f.inverse, g.inverse = g, f
        transitions.append(Transition(src.id, tgt.id, f, g))
    return Atlas(charts, transitions, name="ring")


def sheared_half_cylinder():
    """Two charts on ``[0, inf) x R`` glued by ``x~ = x e^y``."""
    a = Chart("A", ("x", "y"), 1, ((0.0, 2.0), (-1.0, 1.0)))
    b = Chart("B", ("x", "y"), 1, ((0.0, 6.0), (-1.0, 1.0)))
    f = ChartedMap(a, b, ["(* x (exp y))", "y"], name="shear")
    g = ChartedMap(b, a, ["(* x (exp (- y)))", "y"], [(0.0, 6.0), (-1.0, 1.0)], name="unshear")
    f.inverse, g.inverse = g, f
    return Atlas([a, b], [Transition("A", "B", f, g)], name="shear")


class TestHolonomy:
    @pytest.mark.parametrize("alpha", [2, Fraction(1, 2), Fraction(3, 7)])
    def test_quotient_cylinder(self, alpha):
        rep = boundary_holonomy(quotient_cylinder(alpha))
        (c,) = rep.components.values()
        assert c.holonomy == Fraction(alpha) and c.twisted
        assert "wrap" in c.cycle

    def test_untwisted_cylinder(self):
        (c,) = boundary_holonomy(quotient_cylinder(1)).components.values()
        assert c.holonomy == 1 and not c.twisted

    @pytest.mark.parametrize("X", [interval_atlas(), product_atlas(interval_atlas("I"), interval_atlas("J", "y"))])
    def test_ordinary_corners_untwisted(self, X):
        assert all(c.holonomy == 1 for c in boundary_holonomy(X).components.values())

    def test_single_chart(self):
        (c,) = boundary_holonomy(Atlas([H])).components.values()
        assert c.holonomy == 1 and c.cycle == []

    @pytest.mark.parametrize("parts", [[2, 1], [Fraction(2, 3), 3], [1, 1, 2], [4, Fraction(1, 2), 1]])
    def test_refinement_invariance(self, parts):
        total = Fraction(1)
        for p in parts:
            total *= Fraction(p)
        (c,) = boundary_holonomy(ring_cylinder(parts)).components.values()
        assert c.holonomy == total

    def test_report_json(self):
        data = boundary_holonomy(quotient_cylinder(Fraction(2, 3))).to_json()
        assert json.loads(json.dumps(data))["Qa.x"]["holonomy"] == "2/3"


class TestWeightSpace:
    @pytest.mark.parametrize("alpha,dim", [(2, 0), (Fraction(1, 2), 0), (1, 1)])
    def test_cylinder(self, alpha, dim):
        assert weight_space(quotient_cylinder(alpha)).dimension == dim

    def test_interval(self):
        assert weight_space(interval_atlas()).dimension == 2

    def test_twisted_forced_to_zero(self):
        Q = quotient_cylinder(2)
        w = Weight.on_atlas(Q, {"Qa.x": 5})
        assert w["Qa.x"] == 0 and w.notes

    def test_json_round_trip(self):
        w = Weight({"a": Fraction(-3, 4), "b": Fraction(2)})
        assert w.to_json() == {"a": "-3/4", "b": "2"}
        assert Weight.loads(w.dumps()).values == w.values


class TestPullback:
    @pytest.mark.parametrize("alpha", [Fraction(1, 2), Fraction(3), Fraction(5, 4)])
    def test_power_rescales(self, alpha):
        f = ChartedMap(H, Chart.model("S", ["s"]), [f"(pow t {alpha})"])
        assert pullback_weight(f, {"s": Fraction(2, 3)}) == {"t": alpha * Fraction(2, 3)}

    def test_product(self):
        f = ChartedMap(P2, H, ["(* x y)"])
        assert pullback_weight(f, {"t": Fraction(7, 2)}) == {"x": Fraction(7, 2), "y": Fraction(7, 2)}

    def test_identity(self):
        lam = {"x": Fraction(1), "y": Fraction(-2)}
        assert pullback_weight(ChartedMap.identity(P2), lam) == lam

    def test_not_interior(self):
        with pytest.raises(NotInterior):
            pullback_weight(ChartedMap(P2, H, ["0"]), {"t": 1})


class TestPushforward:
    @pytest.mark.parametrize("a,b", [(1, 2), (3, 1), (Fraction(1, 2), Fraction(1, 2))])
    def test_product(self, a, b):
        mu = pushforward_weight(ChartedMap(P2, H, ["(* x y)"]), {"x": a, "y": b})
        assert mu == {"t": min(Fraction(a), Fraction(b))}

    def test_identity(self):
        lam = {"x": Fraction(1), "y": Fraction(-2)}
        assert pushforward_weight(ChartedMap.identity(P2), lam) == lam

    def test_projection(self):
        f = ChartedMap(P2, Chart.model("B", ["y"]), ["y"])
        assert pushforward_weight(f, {"x": Fraction(5), "y": Fraction(2)}) == {"y": Fraction(2)}

    def test_projection_needs_positive_fiber_weight(self):
        f = ChartedMap(P2, Chart.model("B", ["y"]), ["y"])
        with pytest.raises(PositivityViolated):
            pushforward_weight(f, {"x": Fraction(0), "y": Fraction(2)})

    def test_not_b_normal(self):
        W = Chart.model("W", ["w"], ["x"])
        g = ChartedMap(W, Chart.model("T", ["y", "z"]), ["w", "(* w (exp x))"])
        with pytest.raises(NotBNormal):
            pushforward_weight(g, {"w": 1})


_q = st.fractions(min_value=-3, max_value=3, max_denominator=6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([Fraction(0), Fraction(1, 2), Fraction(1), Fraction(2)]), min_size=4, max_size=4),
       st.lists(st.sampled_from([Fraction(1, 3), Fraction(1), Fraction(3, 2)]), min_size=2, max_size=2), _q)
def test_pullback_functoriality(a, b, lam):
    if not (a[0] or a[1]) or not (a[2] or a[3]):
        a = [Fraction(1)] * 4
    f = ChartedMap(P2, Chart.model("Q", ["u", "v"]),
                   [f"(* (pow x {a[0]}) (pow y {a[1]}))", f"(* (pow x {a[2]}) (pow y {a[3]}))"])
    g = ChartedMap(Chart.model("Q", ["u", "v"]), H, [f"(* (pow u {b[0]}) (pow v {b[1]}))"])
    direct = pullback_weight(f.then(g), {"t": lam})
    staged = pullback_weight(f, pullback_weight(g, {"t": lam}))
    assert direct == staged


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=Fraction(1, 8), max_value=4, max_denominator=8),
       st.fractions(min_value=Fraction(1, 8), max_value=4, max_denominator=8),
       st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(3)]))
def test_pushforward_is_maximal(lx, ly, a):
    f = ChartedMap(P2, H, [f"(* (pow x {a}) y)"])
    lam = {"x": lx, "y": ly}
    mu = pushforward_weight(f, lam)
    pulled = pullback_weight(f, mu)
    assert all(pulled[k] <= lam[k] for k in lam)
    eps = Fraction(1, 1000)
    bumped = pullback_weight(f, {"t": mu["t"] + eps})
    assert any(bumped[k] > lam[k] for k in lam)


class TestLineBundle:
    def test_zero_weight_is_trivial(self):
        for X in [interval_atlas(), quotient_cylinder(1), sheared_half_cylinder()]:
            for t in l_lambda_transitions(X, {f: 0 for f in X.face_ids}):
                assert equivalent(t.cocycle, t.cocycle.__class__("const", (), Fraction(1)))

    def test_interval_interior_overlap(self):
        (t,) = l_lambda_transitions(interval_atlas(), {"I0.x": 1, "I1.x": 0})
        assert str(t.cocycle) == "(pow x -1)"

    def test_untwisted_cylinder_weight_two(self):
        Q = quotient_cylinder(1)
        for t in l_lambda_transitions(Q, {"Qa.x": 2}):
            assert t.exponents == {"x": 0}

    def test_positive_factor_appears(self):
        X = sheared_half_cylinder()
        (fid,) = X.face_ids
        (t,) = l_lambda_transitions(X, {fid: 2})
        assert t.exponents == {"x": 0}
        assert equivalent(t.cocycle, X.charts["A"].parse("(exp (* 2 y))"))

    def test_inconsistent_weight(self):
        # a face met by an overlap with exponent 2 cannot keep weight 1 on both sides
        a = Chart("A", ("x",), 1, ((0.0, 1.0),))
        b = Chart("B", ("x",), 1, ((0.0, 1.0),))
        f = ChartedMap(a, b, ["(pow x 2)"], name="sq")
        g = ChartedMap(b, a, ["(pow x 1/2)"], name="sqrt")
        f.inverse, g.inverse = g, f
        X = Atlas([a, b], [Transition("A", "B", f, g)])
        with pytest.raises(WeightInconsistent):
            l_lambda_transitions(X, Weight({"A.x": Fraction(1), "B.x": Fraction(1)}))

    @settings(max_examples=20, deadline=None)
    @given(_q, _q)
    def test_zero_boundary_exponent_on_met_faces(self, l0, l1):
        X = product_atlas(interval_atlas("I"), sheared_half_cylinder())
        lam = dict(zip(X.face_ids, [l0, l1, l0 + l1]))
        for t in l_lambda_transitions(X, lam):
            for x in t.exponents:
                if x in X.charts[t.source].boundary_coords and x in _met(X, t):
                    assert t.exponents[x] == 0


def _met(X, t):
    for tr in X.transitions:
        if tr.map.name == t.name:
            return tr.map.met_faces
    return ()
