from fractions import Fraction
from itertools import product

import pytest
import sympy as sp

from wdvvkit.calibration import (
    LevelError, NonIntegrableError, build_calibration, check_calibration, check_omega, check_R,
    transform_R,
)
from wdvvkit.frobenius import antidiagonal

from conftest import example, setup


def _sym(f, n, prefix="v"):
    v = sp.symbols(f"{prefix}1:{n + 1}")
    return sp.sympify(str(f).replace("^", "**"), locals={f"{prefix}{i + 1}": v[i] for i in range(n)}), v


@pytest.mark.parametrize("name", ["a2", "a3"])
def test_recursion_checked_independently_in_sympy(name):
    s = setup(name, 4)
    cal, n = s["cal"], s["sol"].n
    F, v = _sym(s["sol"].F, n)
    c_up = lambda a, b, g: sp.diff(F, v[n - 1 - a], v[b], v[g])  # c^a_{bg}
    th = {k: _sym(t, n)[0] for k, t in cal.theta.items()}
    for a in range(1, n + 1):
        assert sp.expand(th[(a, 0)] - v[n - a]) == 0
        assert sp.expand(th[(a, 1)] - sp.diff(F, v[a - 1])) == 0
        for p in range(3):
            for b, g in product(range(n), repeat=2):
                lhs = sp.diff(th[(a, p + 1)], v[b], v[g])
                rhs = sum(c_up(s_, b, g) * sp.diff(th[(a, p)], v[s_]) for s_ in range(n))
                assert sp.expand(lhs - rhs) == 0
            assert sp.expand(sp.diff(th[(a, p + 1)], v[0]) - th[(a, p)]) == 0


@pytest.mark.parametrize("name", ["a2", "i2_4", "i2_5", "a3"])
def test_calibration_axioms_and_transform(name):
    s = setup(name, 4)
    assert check_calibration(s["cal"]) == []
    assert s["cal_hat"].level == 3
    assert check_calibration(s["cal_hat"]) == []


@pytest.mark.parametrize("name", ["a2", "a3"])
def test_omega_table(name):
    s = setup(name, 4)
    table = s["table"]
    assert check_omega(table) == []
    for (a, p, b, q), val in table.entries.items():
        if (a, p) == (1, 0):
            assert val == s["cal"].th(b, q)
    assert check_omega(s["table_hat"]) == []


def test_a2_omega_values_by_hand():
    # Omega_{2,0;2,0} = d theta_{2,1}/dv^1 contracted ... computed by hand: v2^2/6
    t = setup("a2", 4)["table"]
    from wdvvkit.algebra.parse import parse_expression
    names = ["v1", "v2"]
    assert t(2, 0, 2, 0) == parse_expression("v2^2/6", names)
    assert t(2, 0, 1, 1) == parse_expression("1/2*v1^2 + v2^3/9", names)


def test_sentinels():
    cal = setup("a2", 4)["cal"]
    assert cal.th(2, -1) == 1 and cal.th(1, -1) == 0
    t = setup("a2", 4)["table"]
    assert t(2, -1, 1, 0) == 1 and t(2, -1, 2, 0) == 0


def test_non_associative_input_is_rejected():
    bad = example("a3_perturbed")
    with pytest.raises(NonIntegrableError):
        build_calibration(bad, P=3)
    with pytest.raises(NonIntegrableError, match="not closed"):
        build_calibration(bad, P=3, precheck=False)


def test_level_errors():
    cal = setup("a2", 4)["cal"]
    with pytest.raises(LevelError):
        cal.th(1, 5)
    with pytest.raises(LevelError):
        check_calibration(cal, 5)
    t = setup("a2", 4)["table"]
    with pytest.raises(LevelError):
        t(1, 2, 1, 2)


def test_transform_R_and_check_R_on_synthetic_matrices():
    # spectrum (-1, 0, 1): R_1 may have entries (2,1) and (3,2); odd k needs eta R symmetric
    n = 3
    mu = (Fraction(-1), Fraction(0), Fraction(1))
    eta = antidiagonal(n)
    R1 = ((0, 0, 0), (1, 0, 0), (0, 1, 0))
    R1 = tuple(tuple(Fraction(x) for x in r) for r in R1)
    assert check_R({1: R1}, mu, eta) == []
    broken = ((0, 0, 0), (1, 0, 0), (0, -1, 0))
    broken = tuple(tuple(Fraction(x) for x in r) for r in broken)
    assert check_R({1: broken}, mu, eta)
    # spectrum (-1,0,1) maps to (0,0,0): no resonances left, so R-hat vanishes
    assert transform_R({1: R1}, n, 3) == {}
    # spectrum (-2,0,2): even k needs eta R antisymmetric
    mu = (Fraction(-2), Fraction(0), Fraction(2))
    R2 = tuple(tuple(Fraction(x) for x in r) for r in ((0, 0, 0), (1, 0, 0), (0, -1, 0)))
    assert check_R({2: R2}, mu, eta) == []
    mu_hat = (mu[2] - 1, mu[1], mu[0] + 1)
    R_hat = transform_R({2: R2}, n, 3)
    assert R_hat and check_R(R_hat, mu_hat, eta) == []
    assert transform_R({}, n, 3) == {}
