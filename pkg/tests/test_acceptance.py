"""Acceptance criteria 1-10 and the end-to-end runtime criterion.

Each test records one line ``ACCEPTANCE <id>: PASS|FAIL  <detail>`` before
asserting; the lines are repeated in an "acceptance" section at the end of
the pytest run.
"""

import time

import pytest
import sympy as sp

from wdvvkit import data_path
from wdvvkit.algebra.parse import parse_expression
from wdvvkit.calibration import check_calibration, check_omega
from wdvvkit.formats import read_genus_data
from wdvvkit.frobenius import check_hessian_identity, check_wdvv, infer_spectrum, nonlocal_charge
from wdvvkit.genus import G2_formula, abstract_series, check_det_identity, check_G1, legendre_expand
from wdvvkit.algebra.jets import JetExpression as J, total_x_derivative
from wdvvkit.algebra.rational import RationalFunction as RF
from wdvvkit.hierarchy import TimeConfiguration, hodograph_solve, richardson_ratio
from wdvvkit.inversion import check_metric_covariance, invert_solution
from wdvvkit.symmetry import hat_x_of, legendre_check, transform_times
from wdvvkit.verify import default_configurations, verify_all
from wdvvkit.virasoro import build_virasoro, check_commutator, constraint_residual

from conftest import ACCEPTANCE_LINES, EXAMPLES, example, setup


def report(tag, ok, detail=""):
    line = f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print("\n" + line, flush=True)
    assert ok, detail


def _all_zero(rows):
    return all(x.is_zero() for row in rows for x in row)


def test_criterion_01_wdvv_closure():
    worst, bad = 0.0, []
    for name in EXAMPLES:
        t0 = time.perf_counter()
        sol = example(name)
        n1 = len(check_wdvv(sol))
        n2 = len(check_wdvv(invert_solution(sol)))
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        if n1 or n2 or dt > 60:
            bad.append(f"{name}: {n1}+{n2} violations, {dt:.1f}s")
    report(1, not bad, "; ".join(bad) or f"{len(EXAMPLES)} examples, slowest {worst:.2f}s")


def test_criterion_02_closed_form():
    got = invert_solution(example("a2")).F
    target = parse_expression("1/2*vh1^2*vh2 + 1/(72*vh2^2)", ["vh1", "vh2"])
    # hand substitution: vh1 = v1, vh2 = -1/v2, Fh = (F - v1^2 v2) / v2^2
    #   = -v1^2/(2 v2) + v2^2/72 = vh1^2 vh2 / 2 + 1/(72 vh2^2)
    v1, v2, h1, h2 = sp.symbols("v1 v2 vh1 vh2")
    F = v1 ** 2 * v2 / 2 + v2 ** 4 / 72
    Fh = ((F - v1 * (2 * v1 * v2) / 2) / v2 ** 2).subs({v1: h1, v2: -1 / h2}, simultaneous=True)
    sympy_ok = sp.simplify(Fh - (h1 ** 2 * h2 / 2 + 1 / (72 * h2 ** 2))) == 0
    pkg_vs_sympy = sp.simplify(sp.sympify(str(got).replace("^", "**"), locals={"vh1": h1, "vh2": h2}) - Fh) == 0
    report(2, got == target and sympy_ok and pkg_vs_sympy,
           f"package={got == target} oracle={sympy_ok} package-vs-oracle={pkg_vs_sympy}")


def test_criterion_03_spectrum():
    bad = []
    for name in EXAMPLES + ["a4"]:
        sol = example(name)
        cd = sol.conformal
        mu = list(cd.mu)
        exp_mu = tuple([mu[-1] - 1] + mu[1:-1] + [mu[0] + 1])
        got = infer_spectrum(invert_solution(sol))
        if got.d != 2 - cd.d or tuple(got.mu) != exp_mu:
            bad.append(f"{name}: got d={got.d} mu={got.mu}")
    report(3, not bad, "; ".join(bad) or "6 examples")


def test_criterion_04_calibration():
    bad = []
    for name in EXAMPLES:
        s = setup(name, 4)
        n1 = len(check_calibration(s["cal"]))
        n2 = len(check_calibration(s["cal_hat"]))
        if n1 or n2 or s["cal_hat"].level != 3 or s["cal_hat"].sol.F != s["sol_hat"].F:
            bad.append(f"{name}: {n1}/{n2} issues, hatted level {s['cal_hat'].level}")
    report(4, not bad, "; ".join(bad) or "P=4 and transformed P=3 on 5 examples")


def test_criterion_05_omega():
    bad, entries = [], 0
    for name in EXAMPLES:
        s = setup(name, 4)
        table, cal = s["table"], s["cal"]
        issues = len(check_omega(table))
        for (a, p, b, q), om in table.entries.items():
            entries += 1
            if p >= 0 and q >= 0 and (b, q, a, p) in table.entries and om != table.entries[(b, q, a, p)]:
                issues += 1
        for b in range(1, cal.n + 1):
            for q in range(cal.level):
                if table(1, 0, b, q) != cal.th(b, q):
                    issues += 1
        if issues:
            bad.append(f"{name}: {issues}")
    report(5, not bad, "; ".join(bad) or f"{entries} entries")


def test_criterion_06_hodograph_and_tau():
    lines, ok = [], True
    for name in ("a2", "a3"):
        s = setup(name, 4)
        n = s["sol"].n
        t = [0.3, 0.45, 0.6][:n]
        cfg = TimeConfiguration({(a, 0): t[a - 1] for a in range(1, n + 1)}, {(1, 1): 1})
        hs = hodograph_solve(s["cal"], cfg, [x + 0.05 for x in t])
        dev = max(abs(x - y) for x, y in zip(hs.v, t))
        ratio, r1, _ = richardson_ratio(s["cal"], s["table"], cfg, 1e-3, hs.v)
        ok &= dev <= 1e-14 and r1.max_deviation <= 1e-6 and ratio >= 3.5
        lines.append(f"{name}: |v-t|={dev:.1e} taudef={r1.max_deviation:.1e} ratio={ratio:.2f}")
    report(6, ok, "; ".join(lines))


def test_criterion_07_legendre():
    bad, count = [], 0
    for name in EXAMPLES:
        s = setup(name, 4)
        n = s["sol"].n
        good = 0
        for label, cfg in default_configurations(n):
            hs = hodograph_solve(s["cal"], cfg, [cfg.t((a, 0)) or 0.2 for a in range(1, n + 1)])
            if abs(hs.v[-1]) < 0.05:
                continue
            rep = legendre_check(s["table"], s["table_hat"], s["cmap"], cfg, hs.v)
            if rep.two_sided <= 1e-8 and rep.prop51_residual <= 1e-9:
                good += 1
            else:
                bad.append(f"{name}/{label}: {rep.two_sided:.1e}, {rep.prop51_residual:.1e}")
        count += good
        if good < 3:
            bad.append(f"{name}: only {good} configurations")
    report(7, not bad, "; ".join(bad) or f"{count} configurations")


def test_criterion_08_proof_identities():
    bad = []
    for name in EXAMPLES:
        sol = example(name)
        cd = sol.conformal
        eta_res, g_res = check_metric_covariance(sol, cd)
        parts = [_all_zero(check_hessian_identity(sol, cd)), nonlocal_charge(sol, cd).is_zero(),
                 _all_zero(eta_res), _all_zero(g_res)]
        if not all(parts):
            bad.append(f"{name}: {parts}")
    report(8, not bad, "; ".join(bad) or "hessian, charge, two covariances on 5 examples")


def test_criterion_09_virasoro():
    worst, ctrl, bad = 0.0, float("inf"), []
    for name in ("a2", "i2_4", "a3"):
        s = setup(name, 4)
        n = s["sol"].n
        for c in (s["cal"], s["cal_hat"]):
            _, wrong = check_commutator(build_virasoro(c, -1), build_virasoro(c, 0), n)
            if wrong:
                bad.append(f"{name}: commutator")
        Ls = {m: build_virasoro(s["cal"], m) for m in (-1, 0)}
        Hs = {m: build_virasoro(s["cal_hat"], m) for m in (-1, 0)}
        for label, cfg in default_configurations(n):
            hs = hodograph_solve(s["cal"], cfg, [cfg.t((a, 0)) or 0.2 for a in range(1, n + 1)])
            cfg_h = transform_times(cfg, hat_x_of(s["cal"], cfg, hs.v), n)
            vh = s["cmap"].forward_point(hs.v)
            for m in (-1, 0):
                worst = max(worst, constraint_residual(Ls[m], s["table"], cfg, hs.v).residual,
                            constraint_residual(Hs[m], s["table_hat"], cfg_h, vh).residual)
                ctrl = min(ctrl, constraint_residual(Ls[m], s["table"], cfg, hs.v,
                                                     derivative_offsets={(1, 0): 0.05}).residual)
    ok = not bad and worst <= 1e-9 and ctrl >= 1e-3
    report(9, ok, "; ".join(bad) or f"max residual {worst:.1e}, min control {ctrl:.1e}")


def test_criterion_10_genus():
    parts = {}
    det = g1 = True
    for name in EXAMPLES:
        s = setup(name, 2)
        det &= check_det_identity(s["sol"], s["sol_hat"], s["cmap"]).is_zero()
        G = read_genus_data(data_path(name + ".G")).get("G")
        rep = check_G1(s["sol"], s["sol_hat"], s["cmap"], G)
        g1 &= rep.x_independent
    parts["det"], parts["G1"] = det, g1
    F1, F2 = abstract_series(2)
    w = J(RF.variable("w1"))
    tilde = legendre_expand([F1, F2], w)
    F1x = total_x_derivative(F1)
    parts["expansion"] = tilde[0] == F1 and tilde[1] == F2 - F1x * F1x / (w * 2)
    parts["G2"] = G2_formula().subs({"vh2_1": 0, "vh2_2": 0}).is_zero()
    report(10, all(parts.values()), " ".join(f"{k}={v}" for k, v in parts.items()))


@pytest.mark.parametrize("name,P,limit", [("a2", 4, 60), ("a3", 3, 600)])
def test_runtime_verify_all(name, P, limit):
    G = read_genus_data(data_path(name + ".G")).get("G")
    t0 = time.perf_counter()
    rep = verify_all(example(name), P, G=G)
    dt = time.perf_counter() - t0
    failed = [c.name for c in rep.checks if not c.passed]
    ok = rep.exit_code == 0 and dt <= limit
    report(f"runtime {name} P={P}", ok,
           f"{dt:.1f}s <= {limit}s, {len(rep.checks)} checks, failed={failed or 'none'} error={rep.error}")
