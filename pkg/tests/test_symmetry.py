from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from wdvvkit.hierarchy import TimeConfiguration, hodograph_solve, tau_log
from wdvvkit.symmetry import (
    check_flow_correspondence, check_omega_relation, hat_x_of, inverse_transform_times, legendre_check,
    legendre_tau, transform_times,
)
from wdvvkit.verify import default_configurations

from conftest import setup

keys = st.tuples(st.integers(1, 3), st.integers(0, 3))
values = st.floats(-2, 2, allow_nan=False).filter(lambda x: x != 0)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(keys, values, max_size=6), st.dictionaries(keys, st.integers(-3, 3), max_size=3),
       st.floats(-1, 1), st.floats(-1, 1))
def test_time_map_round_trip(times, shifts, hx, x):
    n = 3
    times = {k: v for k, v in times.items() if not (k[0] == n and k[1] == 0) or True}
    shifts = {k: v for k, v in shifts.items() if k != (1, 0)}
    cfg = TimeConfiguration({**times, (1, 0): x}, shifts)
    hat = transform_times(cfg, hx, n)
    assert hat.t((1, 0)) == hx
    back = inverse_transform_times(hat, x, n)
    assert back.times == cfg.times and back.shifts == cfg.shifts


def test_time_map_images():
    cfg = TimeConfiguration({(1, 2): 0.5, (3, 0): 0.25, (2, 1): 0.125}, {(1, 1): 1})
    hat = transform_times(cfg, 0.7, 3)
    assert hat.times == {(1, 0): 0.7, (1, 1): -0.25, (2, 1): 0.125, (3, 1): 0.5}
    assert hat.shifts == {(3, 0): 1}


@pytest.mark.parametrize("name,P", [("a2", 4), ("i2_4", 4), ("i2_5", 4), ("a3", 4)])
def test_legendre_law_on_several_configurations(name, P):
    s = setup(name, P)
    n = s["sol"].n
    done = 0
    for label, cfg in default_configurations(n):
        guess = [cfg.t((a, 0)) or 0.2 for a in range(1, n + 1)]
        hs = hodograph_solve(s["cal"], cfg, guess)
        assert abs(hs.v[-1]) >= 0.05
        rep = legendre_check(s["table"], s["table_hat"], s["cmap"], cfg, hs.v)
        assert rep.two_sided <= 1e-8, label
        assert rep.prop51_residual <= 1e-9, label
        assert rep.roundtrip <= 1e-9, label
        done += 1
    assert done >= 3


def test_x_shift_needs_the_shifted_x():
    # with c^{1,0} != 0 the law holds for x - c^{1,0}, and fails for the bare x
    s = setup("a2", 4)
    cfg = TimeConfiguration({(1, 0): 0.3, (2, 0): 0.1, (1, 1): 0.2}, {(1, 1): 1, (1, 0): Fraction(1, 10)})
    hs = hodograph_solve(s["cal"], cfg, [0.3, 0.1])
    rep = legendre_check(s["table"], s["table_hat"], s["cmap"], cfg, hs.v)
    assert rep.two_sided <= 1e-8
    bare = legendre_tau(rep.logtau, cfg.t((1, 0)), rep.hat_x)
    assert abs(bare - rep.logtau_hat_direct) >= 1e-3


def test_hatted_tau_differs_from_tau():
    # sanity: the law is not trivially satisfied by equal values
    s = setup("a2", 4)
    cfg = TimeConfiguration({(1, 0): 0.5, (2, 0): 0.6}, {(1, 1): 1})
    hs = hodograph_solve(s["cal"], cfg, [0.5, 0.6])
    hx = hat_x_of(s["cal"], cfg, hs.v)
    vh = s["cmap"].forward_point(hs.v)
    direct = tau_log(s["table_hat"], transform_times(cfg, hx, 2), vh)
    assert abs(direct - tau_log(s["table"], cfg, hs.v)) >= 1e-3


@pytest.mark.parametrize("name", ["a2", "a3"])
def test_flow_correspondence_and_omega_relation(name):
    s = setup(name, 4)
    count, issues = check_flow_correspondence(s["cal"], s["cal_hat"], s["cmap"])
    assert count > 0 and issues == []
    count, issues = check_omega_relation(s["table"], s["table_hat"], s["cmap"])
    assert count > 0 and issues == []
