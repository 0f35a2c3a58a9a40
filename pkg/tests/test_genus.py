import math
import random
from fractions import Fraction

import pytest

from wdvvkit import data_path
from wdvvkit.algebra.jets import JetExpression as J, partial, total_x_derivative
from wdvvkit.algebra.rational import RationalFunction as RF
from wdvvkit.formats import read_genus_data
from wdvvkit.genus import (
    G1_formula, G2_formula, GenusError, abstract_series, check_det_identity, check_G1, check_G2,
    genus1, inverse_legendre_expand, legendre_expand, recF_residual, transform_G,
)

from conftest import EXAMPLES, example, setup

G_FILES = {"a2": "a2.G", "i2_3": "i2_3.G", "i2_4": "i2_4.G", "i2_5": "i2_5.G", "a3": "a3.G"}


def _G(name):
    return read_genus_data(data_path(G_FILES[name])).get("G")


def _var(name):
    return J(RF.variable(name))


@pytest.mark.parametrize("name", EXAMPLES)
def test_det_identity(name):
    s = setup(name, 2)
    assert check_det_identity(s["sol"], s["sol_hat"], s["cmap"]).is_zero()


@pytest.mark.parametrize("name", EXAMPLES)
def test_G1_difference_is_constant(name):
    s = setup(name, 2)
    rep = check_G1(s["sol"], s["sol_hat"], s["cmap"], _G(name))
    assert rep.x_independent
    assert rep.equals_half_log_minus_one


@pytest.mark.parametrize("name", EXAMPLES)
def test_G_files_are_quasi_homogeneous(name):
    # E(G) = -1/4 sum mu^2 + n d / 48 and d G / d v1 = 0
    sol = example(name)
    cd = sol.conformal
    G = _G(name)
    assert partial(G, "v1").is_zero()
    EG = J(0)
    for a, deg in enumerate(cd.degrees(), 1):
        EG = EG + partial(G, f"v{a}") * _var(f"v{a}") * deg
    gamma = -sum(m * m for m in cd.mu) / 4 + Fraction(sol.n) * cd.d / 48
    assert (EG - gamma).is_zero()


def _numeric_g1_difference(s, G, v, vx):
    """F1 - F1hat + 1/2 log|vh^n|, built from floats: c tensors evaluated at
    points, the hatted jets from a finite-difference Jacobian of the map."""
    sol, sol_hat, cmap = s["sol"], s["sol_hat"], s["cmap"]
    n = sol.n
    pt = {f"v{a + 1}": v[a] for a in range(n)}
    vh = cmap.forward_point(v)
    pth = {f"vh{a + 1}": vh[a] for a in range(n)}
    h = 1e-6
    jac = [[0.0] * n for _ in range(n)]
    for b in range(n):
        up, dn = list(v), list(v)
        up[b] += h
        dn[b] -= h
        fu, fd = cmap.forward_point(up), cmap.forward_point(dn)
        for a in range(n):
            jac[a][b] = (fu[a] - fd[a]) / (2 * h)
    vhx = [sum(jac[a][b] * vx[b] for b in range(n)) / v[-1] for a in range(n)]

    def logdet(c, p, ux):
        import numpy as np
        M = [[sum(c[a][b][g].evaluate(p) * ux[g] for g in range(n)) for b in range(n)] for a in range(n)]
        return math.log(abs(np.linalg.det(M)))

    Gv = J.coerce(G).evaluate(pt)
    Ghat = Gv + float(Fraction(n, 24) - Fraction(1, 2)) * math.log(abs(v[-1]))
    return (logdet(sol.c_lower, pt, vx) / 24 + Gv
            - logdet(sol_hat.c_lower, pth, vhx) / 24 - Ghat + 0.5 * math.log(abs(vh[-1])))


@pytest.mark.parametrize("name", ["a2", "i2_4", "a3"])
def test_G1_two_point_difference(name):
    s = setup(name, 2)
    rng = random.Random(7)
    n = s["sol"].n
    vals = []
    for _ in range(3):
        v = [rng.uniform(0.3, 1.2) for _ in range(n)]
        vx = [rng.uniform(-1, 1) for _ in range(n)]
        vals.append(_numeric_g1_difference(s, _G(name), v, vx))
    assert max(vals) - min(vals) <= 1e-8


def test_G1_two_point_control():
    # dropping the shift of G must break the constancy
    s = setup("a2", 2)
    rng = random.Random(3)
    vals = []
    for _ in range(2):
        v = [rng.uniform(0.3, 1.2) for _ in range(2)]
        vx = [rng.uniform(-1, 1) for _ in range(2)]
        base = _numeric_g1_difference(s, 0, v, vx)
        vals.append(base + float(Fraction(2, 24) - Fraction(1, 2)) * math.log(v[-1]))
    assert abs(vals[0] - vals[1]) >= 1e-3


def test_transform_G_shift():
    assert transform_G(0, 2) == J.log(RF.variable("v2")) * Fraction(-5, 12)
    assert transform_G(0, 3) == J.log(RF.variable("v3")) * Fraction(-3, 8)
    cmap = setup("a2", 2)["cmap"]
    # in hatted coordinates v2 = -1/vh2
    hat = transform_G(0, 2, cmap)
    assert total_x_derivative(hat - J.log(RF.variable("vh2")) * Fraction(5, 12)).is_zero()


def test_legendre_expansion_genus_two():
    F1, F2 = abstract_series(2)
    w = _var("w1")
    t = legendre_expand([F1, F2], w)
    F1x = total_x_derivative(F1)
    assert t[0] == F1
    assert t[1] == F2 - F1x * F1x / (w * 2)


def test_legendre_expansion_genus_three():
    F1, F2, F3 = abstract_series(3)
    w = _var("w1")
    t = legendre_expand([F1, F2, F3], w)
    a, b, c = _var("F1_1"), _var("F1_2"), _var("F2_1")
    wx = _var("w1_1")
    hand = (-a ** 3 * wx / 6 + a * a * b * w / 2 - a * c * w * w + F3 * w ** 3) / w ** 3
    assert t[2] == hand


@pytest.mark.parametrize("g_max", [1, 2, 3])
def test_inverse_expansion_round_trip(g_max):
    series = abstract_series(g_max)
    w = _var("w1")
    back = inverse_legendre_expand(legendre_expand(series, w), w)
    assert all(x == y for x, y in zip(back, series))


def test_recF_residual_vanishes():
    series = abstract_series(3)
    w = _var("w1")
    assert all(r.is_zero() for r in recF_residual(series, legendre_expand(series, w), w))
    wrong = legendre_expand(series, w)
    wrong[1] = wrong[1] + 1
    assert not all(r.is_zero() for r in recF_residual(series, wrong, w))


def test_expansion_errors():
    with pytest.raises(GenusError):
        legendre_expand([], _var("w1"))
    with pytest.raises(GenusError):
        legendre_expand(abstract_series(1), J.log(RF.variable("w1")))


def test_G2_formula_constant_and_not():
    G2 = G2_formula()
    assert G2.subs({"vh2_1": 0, "vh2_2": 0}).is_zero()
    assert not G2.subs({"vh2_2": 0}).is_zero()
    assert G1_formula(_var("w1")) == J.log(RF.variable("w1")) * Fraction(-1, 2) + J(0, log_minus_one=Fraction(1, 2))


def test_G2_harness():
    # constructed data: F2hat chosen to balance, then perturbed
    s = setup("a2", 2)
    sol, cmap = s["sol"], s["cmap"]
    F1 = genus1(sol)
    F2 = _var("v2_2") / _var("v2") ** 2
    from wdvvkit.genus import G2_pullback
    tilde = legendre_expand([F1, F2], J(sol.coordinate(2)))
    balanced = tilde[1] - G2_pullback(sol, cmap)
    assert check_G2(F1, F2, balanced, sol, cmap).is_zero()
    assert not check_G2(F1, F2, balanced + _var("v2_1"), sol, cmap).is_zero()
