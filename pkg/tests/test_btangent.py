from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcalc.atlas import Chart, ChartedMap, quotient_cylinder
from bcalc.btangent import (
    BVectorField,
    b_jacobian,
    b_lie_bracket,
    chain_rule_residual,
    is_b_fibration,
    is_b_submersion,
)
from bcalc.errors import NotInterior
from bcalc.expr import equivalent, is_zero

P2 = Chart.model("P2", ["x", "y"])
H = Chart.model("H", ["t"])
W = Chart.model("W", ["w"], ["x"])
T = Chart.model("T", ["y", "z"])
C = Chart.model("C", ["x"], ["y"])


def _json(f):
    return b_jacobian(f).to_json()


class TestJacobian:
    def test_product(self):
        assert _json(ChartedMap(P2, H, ["(* x y)"])) == [["1", "1"]]

    def test_not_b_normal_example(self):
        assert _json(ChartedMap(W, T, ["w", "(* w (exp x))"])) == [["1", "0"], ["1", "1"]]

    @pytest.mark.parametrize("alpha", ["1/2", "2", "7/3"])
    def test_power(self, alpha):
        f = ChartedMap(H, Chart.model("S", ["s"]), [f"(pow t {alpha})"])
        assert _json(f) == [[alpha]]

    def test_zero_component(self):
        with pytest.raises(NotInterior):
            b_jacobian(ChartedMap(H, Chart.model("S", ["s"]), ["0"]))

    def test_boundary_diagonal_equals_exponent(self):
        # x~ = x^2 (1 + x) e^y: the entry at x = 0 is the exponent 2
        f = ChartedMap(C, C, ["(* (pow x 2) (+ 1 x) (exp y))", "y"])
        J = b_jacobian(f)
        for y in (-0.3, 0.0, 0.4):
            assert J.at({"x": 0.0, "y": y})[0, 0] == 2.0

    def test_cylinder_transitions(self):
        for alpha in (2, Fraction(1, 2)):
            Q = quotient_cylinder(alpha)
            wrap = Q.transitions[1].map
            J = b_jacobian(wrap)
            assert J.at({"x": 0.0, "y": 0.0})[0, 0] == pytest.approx(float(alpha), abs=0)


class TestSubmersion:
    def test_projection(self):
        f = ChartedMap(Chart.model("U", ["x"], ["y"]), Chart.model("B", ["x"]), ["x"])
        assert is_b_submersion(f) and is_b_fibration(f)

    def test_product(self):
        f = ChartedMap(P2, H, ["(* x y)"])
        assert is_b_submersion(f) and is_b_fibration(f)

    def test_constant_to_interior(self):
        f = ChartedMap(P2, Chart.model("R", [], ["s"]), ["3"])
        assert not is_b_submersion(f)

    def test_not_b_normal_is_not_fibration(self):
        assert not is_b_fibration(ChartedMap(W, T, ["w", "(* w (exp x))"]))

    def test_identity(self):
        assert is_b_fibration(ChartedMap.identity(P2))


class TestBracket:
    def test_frames_commute(self):
        u = BVectorField.from_strings(C, ["1", "0"])
        v = BVectorField.from_strings(C, ["0", "1"])
        assert all(is_zero(c) for c in b_lie_bracket(u, v).coeffs)

    def test_self_bracket(self):
        u = BVectorField.from_strings(C, ["(* x y)", "(pow x 1/2)"])
        assert all(is_zero(c) for c in b_lie_bracket(u, u).coeffs)

    def test_half_power(self):
        u = BVectorField.from_strings(C, ["1", "0"])
        v = BVectorField.from_strings(C, ["0", "(pow x 1/2)"])
        w = b_lie_bracket(u, v)
        assert is_zero(w.coeffs[0])
        assert equivalent(w.coeffs[1], C.parse("(* 1/2 (pow x 1/2))"))


_poly = st.lists(st.integers(-2, 2), min_size=3, max_size=3).map(
    lambda c: f"(+ {c[0]} (* {c[1]} x) (* {c[2]} x y))")


@settings(max_examples=25, deadline=None)
@given(st.lists(_poly, min_size=6, max_size=6))
def test_bracket_identities(cs):
    u, v, w = (BVectorField.from_strings(C, cs[i : i + 2]) for i in (0, 2, 4))
    uv, vu = b_lie_bracket(u, v), b_lie_bracket(v, u)
    assert all(is_zero(a + b) for a, b in zip(uv.coeffs, vu.coeffs))
    jac = [b_lie_bracket(u, b_lie_bracket(v, w)), b_lie_bracket(v, b_lie_bracket(w, u)),
           b_lie_bracket(w, b_lie_bracket(u, v))]
    for i in range(2):
        assert is_zero(jac[0].coeffs[i] + jac[1].coeffs[i] + jac[2].coeffs[i])


def test_chain_rule():
    f = ChartedMap(C, P2, ["(* x (exp y))", "(* (pow x 2) (+ 1 (* y y)))"])
    g = ChartedMap(P2, Chart.model("R", ["r"], ["s"]), ["(* x (pow y 1/2))", "(+ (sin x) y)"])
    rng = np.random.default_rng(0)
    pts = [{"x": float(rng.uniform(0.05, 2.0)), "y": float(rng.uniform(-1.0, 1.0))} for _ in range(100)]
    assert chain_rule_residual(f, g, pts) <= 1e-9
