import pytest
from hypothesis import given, settings, strategies as st

from wdvvkit.algebra.rational import RationalFunction as RF
from wdvvkit.hierarchy import (
    HodographError, TimeConfiguration, check_flows_commute, check_tau_def, dlogtau, flow,
    hodograph_solve, richardson_ratio, tau_log, tau_log_expression,
)
from wdvvkit.symmetry import hat_x_of

from conftest import setup


def test_a2_flow_matrix_by_hand():
    cal = setup("a2", 4)["cal"]
    # theta_{2,1} = dF/dv2 = v1^2/2 + v2^3/18, Hessian diag(1, v2/3), raised by the antidiagonal eta
    A = flow(cal, 2, 0).A
    assert A[0][0].is_zero() and A[0][1] == RF.variable("v2") / 3
    assert A[1][0] == 1 and A[1][1].is_zero()
    x = flow(cal, 1, 0).A
    assert all((x[i][j] - int(i == j)).is_zero() for i in range(2) for j in range(2))


@pytest.mark.parametrize("name,keys", [
    ("a2", [(a, p) for p in range(3) for a in (1, 2)]),
    ("a3", [(a, p) for p in range(2) for a in (1, 2, 3)]),
])
def test_flows_commute(name, keys):
    assert check_flows_commute(setup(name, 4)["cal"], keys) == []


@settings(max_examples=20, deadline=None)
@given(st.floats(-1, 1), st.floats(0.05, 1.5))
def test_trivial_solution_is_exact(x, s):
    cal = setup("a2", 4)["cal"]
    cfg = TimeConfiguration({(1, 0): x, (2, 0): s}, {(1, 1): 1})
    hs = hodograph_solve(cal, cfg, [x + 0.1, s + 0.1])
    assert abs(hs.v[0] - x) <= 1e-14 and abs(hs.v[1] - s) <= 1e-14


def test_log_tau_on_trivial_solution_is_F():
    s = setup("a2", 4)
    cfg = TimeConfiguration({(1, 0): 0.3, (2, 0): 0.1}, {(1, 1): 1})
    hs = hodograph_solve(s["cal"], cfg, [0.3, 0.1])
    F = 0.5 * 0.3 ** 2 * 0.1 + 0.1 ** 4 / 72
    assert tau_log(s["table"], cfg, hs.v) == pytest.approx(F, abs=1e-15)
    expr = tau_log_expression(s["table"], cfg)
    assert expr.evaluate({"v1": 0.3, "v2": 0.1}) == pytest.approx(F, abs=1e-15)


@pytest.mark.parametrize("name", ["a2", "a3"])
def test_tau_second_derivatives_and_richardson(name):
    s = setup(name, 4)
    n = s["sol"].n
    cfg = TimeConfiguration({(a, 0): 0.3 - 0.1 * (a - 1) for a in range(1, n + 1)}, {(1, 1): 1})
    ratio, r1, r2 = richardson_ratio(s["cal"], s["table"], cfg, 1e-3, [0.3] * n)
    assert r1.max_deviation <= 1e-6
    assert ratio >= 3.5


def test_first_derivative_of_log_tau_in_x():
    s = setup("a3", 4)
    cal, table = s["cal"], s["table"]
    cfg = TimeConfiguration({(1, 0): 0.4, (2, 0): 0.3, (3, 0): 0.6, (1, 1): 0.2}, {(1, 1): 1})
    hs = hodograph_solve(cal, cfg, [0.4, 0.3, 0.6])
    h = 1e-5
    vals = []
    for sgn in (1, -1):
        c = cfg.shifted((1, 0), sgn * h)
        vals.append(tau_log(table, c, hodograph_solve(cal, c, hs.v).v))
    fd = (vals[0] - vals[1]) / (2 * h)
    assert abs(fd - hat_x_of(cal, cfg, hs.v)) <= 1e-6
    assert dlogtau(table, cfg, hs.v, (1, 0)) == pytest.approx(hat_x_of(cal, cfg, hs.v), abs=1e-14)


def test_tau_def_fails_for_wrong_table():
    # negative control: finite differences of the A2 flows against another solution's table
    s = setup("a2", 5)
    # (on the trivial solution any table is self-consistent, so higher times are switched on)
    other = setup("i2_4", 5)["table"]
    cfg = TimeConfiguration({(1, 0): 0.3, (2, 0): 0.4, (1, 1): 0.2, (2, 1): 0.3}, {(1, 1): 1})
    good = check_tau_def(s["cal"], s["table"], cfg, 1e-3, [0.3, 0.4], [(1, 0), (2, 0)])
    assert good.max_deviation <= 1e-6
    wrong = check_tau_def(s["cal"], other, cfg, 1e-3, [0.3, 0.4], [(1, 0), (2, 0)])
    assert wrong.max_deviation >= 1e-3


def test_hodograph_errors():
    cal = setup("a2", 4)["cal"]
    with pytest.raises(HodographError):
        hodograph_solve(cal, TimeConfiguration(), [0.1, 0.1])
    with pytest.raises(HodographError):
        hodograph_solve(cal, TimeConfiguration({(1, 0): 0.1}, {(1, 1): 1}), [0.1])
