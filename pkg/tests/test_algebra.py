from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from wdvvkit.algebra.jets import (
    JetExpression, LOG_MINUS_ONE, LogProductError, pullback_jets, total_x_derivative,
)
from wdvvkit.algebra.linsolve import InconsistentSystemError, solve
from wdvvkit.algebra.parse import ExpressionError, parse_expression, parse_jet, parse_rational
from wdvvkit.algebra.rational import RationalFunction as RF, determinant, inverse

NAMES = ["v1", "v2", "v3"]
small = st.integers(-4, 4)


@st.composite
def polynomials(draw):
    terms = draw(st.lists(st.tuples(small, st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)),
                          min_size=1, max_size=4))
    return " + ".join(f"({c})*v1^{a}*v2^{b}*v3^{e}" for c, a, b, e in terms)


@settings(max_examples=40, deadline=None)
@given(polynomials(), polynomials())
def test_arithmetic_matches_sympy(p, q):
    a, b = parse_expression(p, NAMES), parse_expression(q, NAMES)
    sa, sb = (sp.sympify(x.replace("^", "**")) for x in (p, q))
    assert sp.simplify(sp.sympify(str((a * b + a - b)).replace("^", "**")) - (sa * sb + sa - sb)) == 0
    if not b.is_zero():
        r = a / b
        assert sp.simplify(sp.sympify(str(r).replace("^", "**")) - sa / sb) == 0


@settings(max_examples=40, deadline=None)
@given(polynomials(), polynomials())
def test_printing_round_trips(p, q):
    b = parse_expression(q, NAMES)
    if b.is_zero():
        return
    r = parse_expression(p, NAMES) / b
    assert parse_expression(str(r), NAMES) == r


@settings(max_examples=30, deadline=None)
@given(polynomials(), polynomials())
def test_leibniz_rule(p, q):
    a, b = parse_expression(p, NAMES), parse_expression(q, NAMES)
    for x in NAMES:
        assert (a * b).diff(x) == a.diff(x) * b + a * b.diff(x)


def test_parse_rejects_floats_and_unknowns():
    with pytest.raises(ExpressionError, match="integer literals"):
        parse_expression("0.5*v1", NAMES)
    with pytest.raises(ExpressionError, match="unknown variable"):
        parse_expression("v4", NAMES)
    with pytest.raises(ExpressionError, match="division by zero"):
        parse_expression("v1/0", NAMES)
    with pytest.raises(ExpressionError, match="integer constants"):
        parse_expression("v1^v2", NAMES)
    assert parse_rational("-3/6") == Fraction(-1, 2)


def test_evaluate_is_exact_enough():
    f = parse_expression("(v1^2 - 1/3*v2)/(v2^3)", NAMES)
    assert f.evaluate({"v1": 0.5, "v2": 0.25, "v3": 0.0}) == pytest.approx((0.25 - 0.25 / 3) / 0.25 ** 3)
    assert f.subs({"v1": RF.constant(2)}) == parse_expression("(4 - 1/3*v2)/(v2^3)", NAMES)


def test_determinant_and_inverse():
    m = [[parse_expression(x, NAMES) for x in row] for row in (["v1", "1"], ["v2", "v1"])]
    assert determinant(m) == parse_expression("v1^2 - v2", NAMES)
    inv = inverse(m)
    for i in range(2):
        for j in range(2):
            s = sum((m[i][k] * inv[k][j] for k in range(2)), RF.constant(0))
            assert s == RF.constant(int(i == j))


def test_total_derivative_and_logs():
    e = parse_jet("log(v2) + v1_1*v2")
    d = total_x_derivative(e)
    assert d.rational == parse_expression("v2_1/v2 + v1_2*v2 + v1_1*v2_1")
    assert (JetExpression.log(RF.variable("v2") ** 2) - JetExpression.log(RF.variable("v2")) * 2).is_zero()
    m1 = parse_jet(f"log(-v2) - log(v2) - {LOG_MINUS_ONE}")
    assert m1.is_zero()
    with pytest.raises(LogProductError):
        _ = JetExpression.log(RF.variable("v2")) * RF.variable("v1")


def test_pullback_of_jets():
    # u = v^2 with d/dy = (1/v) d/dx
    v = RF.variable("v1")
    e = parse_jet("u1_1")
    out = pullback_jets(e, {("u", 1): v * v}, lambda f: total_x_derivative(f) / v)
    assert out.rational == parse_expression("2*v1_1")


def test_linear_solver():
    x, free = solve([[Fraction(1), Fraction(1)], [Fraction(1), Fraction(-1)]], [Fraction(3), Fraction(1)],
                    require_unique=True)
    assert x == [2, 1] and not free
    x, free = solve([[Fraction(1), Fraction(1)]], [Fraction(2)])
    assert free and x[0] + x[1] == 2
    with pytest.raises(InconsistentSystemError):
        solve([[Fraction(1)], [Fraction(1)]], [Fraction(1), Fraction(2)])
