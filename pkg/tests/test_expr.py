import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bcalc.errors import DomainError, Indeterminate, ParseError
from bcalc.expr import (
    SmoothnessClass,
    b_derivative,
    bvar,
    classify_function,
    const,
    equivalent,
    evaluate,
    exp,
    iterated_b_derivative,
    leading_behavior,
    log,
    parse,
    power,
    simplify,
    sin,
    to_sexpr,
)
from oracles import expressions, random_interior_points, sympy_b_derivative, sympy_value, loglog_fit

x = bvar("x")


class TestSexpr:
    @pytest.mark.parametrize(
        "text",
        [
            "(* (pow x 1/2) (sin (log x)))",
            "(/ 1 (log x))",
            "(/ 1 (loglog x))",
            "(+ w (* w (exp y)))",
            "(- x)",
            "(- x 3/7)",
            "(cos (* -2 y))",
        ],
    )
    def test_text_round_trip(self, text):
        e = parse(text, interior=["y"])
        assert to_sexpr(e) == text
        assert parse(to_sexpr(e), interior=["y"]) == e

    @given(expressions())
    def test_tree_round_trip(self, e):
        assert parse(to_sexpr(e), interior=["w"]) == e

    def test_decimal_reads_exactly(self):
        assert parse("(pow x 0.3)").data == Fraction(3, 10)

    @pytest.mark.parametrize("bad", ["", "(", "(+ x", "(foo x)", "(pow x y)", "(log (+ x 1))", "x y", "(log w)"])
    def test_parse_errors(self, bad):
        with pytest.raises(ParseError):
            parse(bad, interior=["w"])

    def test_interior_flag(self):
        e = parse("(* x w)", interior=["w"])
        assert e.variables == {("x", True), ("w", False)}


class TestBDerivative:
    @pytest.mark.parametrize("alpha", [Fraction(1, 2), Fraction(2), Fraction(-3, 4), Fraction(7, 3)])
    def test_power(self, alpha):
        assert equivalent(b_derivative(power(x, alpha), "x"), const(alpha) * power(x, alpha))

    @pytest.mark.parametrize("order", range(1, 7))
    def test_inverse_log_closed_form(self, order):
        f = parse("(/ 1 (log x))")
        expected = const((-1) ** order * math.factorial(order)) * power(log(x), -order - 1)
        assert equivalent(iterated_b_derivative(f, "x", order), expected)

    def test_constant(self):
        assert b_derivative(const(5), "x") == const(0)

    def test_interior_variable_is_plain_derivative(self):
        e = parse("(* x (sin w))", interior=["w"])
        assert equivalent(b_derivative(e, "w"), parse("(* x (cos w))", interior=["w"]))

    @pytest.mark.parametrize("alpha", [Fraction(3, 10), Fraction(1, 2), Fraction(2)])
    def test_oscillating_power_against_sympy(self, alpha):
        f = power(x, alpha) * sin(log(x))
        d = b_derivative(f, "x")
        claimed = power(x, alpha) * (const(alpha) * sin(log(x)) + parse("(cos (log x))"))
        assert equivalent(d, claimed)
        ref, syms = sympy_b_derivative(f, "x")
        for pt in (0.1, 0.01, 2.5):
            assert evaluate(d, {"x": pt}) == pytest.approx(sympy_value(ref, syms, {"x": pt}), rel=1e-12)
            h = 1e-5
            fd = (evaluate(f, {"x": pt * (1 + h)}) - evaluate(f, {"x": pt * (1 - h)})) / (2 * h)
            assert fd == pytest.approx(evaluate(d, {"x": pt}), rel=1e-6)

    def test_loglog(self):
        d = b_derivative(parse("(loglog x)"), "x")
        assert equivalent(d, parse("(/ 1 (log x))"))

    def test_idempotent_simplification(self):
        d = b_derivative(parse("(* (exp (* 2 x)) (pow (+ 1 x) 1/2))"), "x")
        assert simplify(d) == d


@settings(max_examples=60, deadline=None)
@given(expressions(), expressions(), st.sampled_from(["x", "y", "w"]))
def test_leibniz_rule(f, g, v):
    lhs = b_derivative(f * g, v) - f * b_derivative(g, v) - g * b_derivative(f, v)
    assert simplify(lhs) == const(0)
    rng = np.random.default_rng(7)
    for pt in random_interior_points(rng, 100):
        try:
            val = evaluate(lhs, pt)
        except DomainError:
            continue
        assert abs(val) < 1e-10 * max(1.0, abs(evaluate(f * g, pt)), abs(evaluate(b_derivative(f * g, v), pt)))


@settings(max_examples=60, deadline=None)
@given(expressions(), expressions(), st.fractions(-5, 5, max_denominator=7), st.sampled_from(["x", "y", "w"]))
def test_linearity(f, g, c, v):
    lhs = b_derivative(const(c) * f + g, v)
    rhs = const(c) * b_derivative(f, v) + b_derivative(g, v)
    assert equivalent(lhs, rhs)


@settings(max_examples=60, deadline=None)
@given(expressions(max_leaves=5))
def test_finite_difference_agreement(f):
    d = b_derivative(f, "x")
    rng = np.random.default_rng(11)
    h = 1e-5
    for pt in random_interior_points(rng, 10):
        try:
            up = evaluate(f, {**pt, "x": pt["x"] * (1 + h)})
            dn = evaluate(f, {**pt, "x": pt["x"] * (1 - h)})
            exact = evaluate(d, pt)
        except DomainError:
            continue
        fd = (up - dn) / (2 * h)
        scale = max(1.0, abs(exact), abs(up))
        assert abs(fd - exact) <= 1e-6 * scale


class TestLeadingBehavior:
    def test_monomial_times_polynomial(self):
        lb = leading_behavior(parse("(* (pow x 1/2) (+ 1 x))"), "x")
        assert lb.as_tuple() == (Fraction(1, 2), 0, const(1))

    def test_inverse_log(self):
        lb = leading_behavior(parse("(/ 1 (log x))"), "x")
        assert lb.as_tuple() == (0, -1, const(1))

    def test_x_log_x_plus_square(self):
        e = parse("(+ (* x (log x)) (* x x))")
        lb = leading_behavior(e, "x")
        assert lb.as_tuple() == (1, 1, const(1))
        # independent check: after dividing out |log x| the slope is 1
        slope = loglog_fit(lambda t: evaluate(e, {"x": t}) / math.log(t))
        assert abs(slope - 1) < 1e-3

    def test_cancellation_resolved_by_expansion(self):
        lb = leading_behavior(parse("(- (pow (+ 1 x) 1/2) 1)"), "x")
        assert lb.as_tuple() == (1, 0, const(Fraction(1, 2)))

    def test_other_variables_in_coefficient(self):
        lb = leading_behavior(parse("(* (pow x 2) (exp y))"), "x")
        assert lb.alpha == 2 and equivalent(lb.coeff, parse("(exp y)"))

    def test_identically_zero(self):
        assert leading_behavior(parse("(- x x)"), "x").is_zero

    def test_oscillating_coefficient(self):
        lb = leading_behavior(parse("(* (pow x 3/10) (sin (log x)))"), "x")
        assert lb.alpha == Fraction(3, 10) and lb.oscillatory

    def test_outside_fragment_is_indeterminate(self):
        with pytest.raises(Indeterminate):
            leading_behavior(parse("(exp (/ 1 x))"), "x")

    @settings(max_examples=40, deadline=None)
    @given(st.fractions(Fraction(1, 10), 5, max_denominator=12), st.integers(-2, 2), st.integers(1, 4))
    def test_leading_term_removal_improves(self, a, b, extra):
        lead = power(x, a) * power(log(x), b) if b else power(x, a)
        e = lead + power(x, a + extra)
        lb = leading_behavior(e, "x")
        assert (lb.alpha, lb.log_power) == (a, b)
        rest = leading_behavior(e - lead, "x")
        assert rest.alpha > lb.alpha or (rest.alpha == lb.alpha and rest.log_power < lb.log_power)


class TestClassify:
    @pytest.mark.parametrize("alpha", ["1/2", "1", "3", "1/7"])
    def test_power_is_a_smooth(self, alpha):
        assert classify_function(parse(f"(pow x {alpha})")).verdict is SmoothnessClass.ASmooth

    @pytest.mark.parametrize("alpha", ["1/2", "2"])
    def test_oscillating_power_is_a_smooth(self, alpha):
        e = parse(f"(* (pow x {alpha}) (sin (log x)))")
        assert classify_function(e).verdict is SmoothnessClass.ASmooth

    def test_inverse_log_is_r_smooth_only(self):
        c = classify_function(parse("(/ 1 (log x))"))
        assert c.verdict is SmoothnessClass.RSmoothNotA and c.log_decay

    def test_inverse_loglog_is_r_smooth_only(self):
        c = classify_function(parse("(/ 1 (loglog x))"))
        assert c.verdict is SmoothnessClass.RSmoothNotA and c.log_decay

    @pytest.mark.parametrize("text", ["(+ 1 x (* 3 (pow x 2)))", "(* (exp x) (cos y))", "(* (pow x 2) (pow y 3))",
                                      "(+ (* x y) 2)", "(exp (+ x w))"])
    def test_ordinary_smooth_is_a_smooth(self, text):
        assert classify_function(parse(text, interior=["w"])).verdict is SmoothnessClass.ASmooth

    def test_not_continuous(self):
        assert classify_function(parse("(sin (log x))")).verdict is SmoothnessClass.NotRDifferentiable
        assert classify_function(parse("(log x)")).verdict is SmoothnessClass.NotRDifferentiable

    def test_order_is_reported(self):
        assert classify_function(parse("x"), order=3).order == 3

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(["(pow x 1/2)", "(* x (sin (log x)))", "(+ 1 (pow x 3/2))", "(exp x)", "(* (pow x 1/3) (cos (log x)))"]),
           st.sampled_from(["(pow x 2/3)", "(+ 2 x)", "(* (pow x 1/4) (sin (log x)))", "(cos x)"]))
    def test_closure_under_sum_and_product(self, a, b):
        f, g = parse(a), parse(b)
        assert classify_function(f + g, order=4).verdict is SmoothnessClass.ASmooth
        assert classify_function(f * g, order=4).verdict is SmoothnessClass.ASmooth

    @pytest.mark.parametrize("text", ["(pow x 1/2)", "(/ 1 (log x))", "(+ 1 x)"])
    def test_a_smooth_implies_r_conditions(self, text):
        c = classify_function(parse(text))
        if c.verdict is SmoothnessClass.ASmooth:
            for face, rows in c.witness.items():
                assert all(a == float("inf") or a >= 0 for _, a, _ in rows)
        assert c.verdict.at_least(SmoothnessClass.RSmoothNotA)


class TestEvaluate:
    def test_square_root(self):
        assert evaluate(parse("(pow x 1/2)"), {"x": 4}) == 2.0

    def test_limit_convention(self):
        assert evaluate(parse("(* x (log x))"), {"x": 0}) == 0.0
        assert evaluate(b_derivative(parse("(/ 1 (log x))"), "x"), {"x": 0}) == 0.0
        assert evaluate(parse("(+ 3 (pow x 1/2))"), {"x": 0}) == 3.0

    def test_closed_form_oscillation(self):
        v = evaluate(parse("(* (pow x 0.3) (sin (log x)))"), {"x": math.exp(math.pi / 2)})
        assert v == pytest.approx(math.exp(0.3 * math.pi / 2), rel=1e-14)

    def test_negative_boundary_coordinate(self):
        with pytest.raises(DomainError):
            evaluate(parse("x"), {"x": -1.0})

    def test_zero_to_zero(self):
        with pytest.raises(DomainError):
            evaluate(parse("(pow x 0)"), {"x": 0.0})

    def test_no_limit(self):
        with pytest.raises(DomainError):
            evaluate(parse("(sin (log x))"), {"x": 0.0})

    def test_deterministic(self):
        e = parse("(* (exp x) (sin (* 3 x)))")
        assert evaluate(e, {"x": 0.37}) == evaluate(e, {"x": 0.37})

    def test_sympy_agreement(self):
        from oracles import to_sympy

        e = parse("(* (pow x 3/2) (exp (sin (log x))) (cos w))", interior=["w"])
        ref, syms = to_sympy(e)
        pt = {"x": 0.7, "w": -1.2}
        assert evaluate(e, pt) == pytest.approx(sympy_value(ref, syms, pt), rel=1e-13)
