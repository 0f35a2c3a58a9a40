"""Command line front end: ``wdvvkit <command> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
or input errors.  Reports are deterministic for identical inputs.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .algebra.jets import JetExpression
from .algebra.parse import ExpressionError
from .algebra.rational import RationalFunction
from .calibration import (
    CalibrationError, LevelError, build_calibration, check_calibration, omega_table, transform_calibration,
)
from .formats import (
    FileFormatError, format_calibration, format_solution, read_calibration, read_genus_data, read_solution,
)
from .frobenius import SolutionError, check_conformal, check_wdvv
from .genus import (
    G2_formula, abstract_series, check_det_identity, check_G1, check_G2, genus1, legendre_expand,
    pull_back_hatted_jets, recF_residual,
)
from .hierarchy import HodographError, TimeConfiguration, hodograph_solve, tau_log
from .inversion import inversion_map, invert_solution
from .symmetry import hat_x_of, legendre_check, transform_times
from .verify import RunReport, exact, numeric, verify_all
from .virasoro import build_virasoro, constraint_residual

log = logging.getLogger("wdvvkit")


class UsageError(Exception):
    pass


# -- argument helpers ------------------------------------------------------------

def _number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None


def _assignment(text: str) -> tuple[tuple[int, int], Fraction]:
    """``"a,p=value"``."""
    try:
        lhs, rhs = text.split("=")
        a, p = (int(x) for x in lhs.split(","))
    except ValueError:
        raise UsageError(f"expected 'a,p=value', got {text!r}") from None
    return (a, p), _number(rhs)


def _config(args, cal) -> TimeConfiguration:
    times = dict(_assignment(t) for t in args.time or [])
    shifts = dict(_assignment(s) for s in args.shift or [])
    for a, p in list(times) + list(shifts):
        if not 1 <= a <= cal.n or p < 0:
            raise UsageError(f"time index ({a},{p}) out of range for n={cal.n}")
        if p > cal.level:
            raise UsageError(f"time ({a},{p}) needs a calibration of level >= {p}, file has {cal.level}")
    return TimeConfiguration({k: float(v) for k, v in times.items()}, shifts)


def _guess(args, cal, cfg) -> list[float]:
    if args.guess:
        vals = [float(_number(x)) for x in args.guess.split(",")]
        if len(vals) != cal.n:
            raise UsageError(f"--guess needs {cal.n} values")
        return vals
    return [cfg.t((a, 0)) or 0.2 for a in range(1, cal.n + 1)]


def _tolerances(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected name=value for --tol, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(_number(v))
    return out


def _load_G(path):
    if path is None:
        return 0
    data = read_genus_data(Path(path))
    G = data.get("G")
    if G is None:
        raise UsageError(f"{path} has no G entry")
    return G


def _emit(report: RunReport, args) -> int:
    out = report.tsv() if getattr(args, "format", "text") == "tsv" else report.text()
    sys.stdout.write(out)
    return report.exit_code


def _command(args) -> str:
    return " ".join(["wdvvkit"] + args.argv)


# -- commands --------------------------------------------------------------------

def cmd_check(args) -> int:
    sol = read_solution(Path(args.solution))
    rep = RunReport(_command(args))
    res = check_wdvv(sol)
    shown = ", ".join(f"({', '.join(map(str, r.indices))})" for r in res[:5])
    rep.add(exact("wdvv", len(res), f"violated (a,b,g,nu): {shown}" if res else ""))
    if sol.conformal is None:
        rep.notes.append("conformal section skipped: no d and mu given")
    else:
        bad = check_conformal(sol, sol.conformal)
        rep.add(exact("conformal", int(not bad.is_zero()), "" if bad.is_zero() else f"E(F)-(3-d)F-Q = {bad}"))
    return _emit(rep, args)


def cmd_invert(args) -> int:
    sol = read_solution(Path(args.solution))
    rep = RunReport(_command(args))
    sol_hat = invert_solution(sol, args.hat_prefix, cmap=inversion_map(sol.n, sol.prefix, args.hat_prefix))
    rep.add(exact("inverted wdvv", len(check_wdvv(sol_hat))))
    text = format_solution(sol_hat, f"inversion of {sol.name or args.solution}")
    if args.output == "-":
        sys.stdout.write(text)
        return rep.exit_code
    Path(args.output).write_text(text)
    rep.notes.append(f"wrote {args.output}")
    return _emit(rep, args)


def cmd_calibrate(args) -> int:
    sol = read_solution(Path(args.solution))
    rep = RunReport(_command(args))
    cal = build_calibration(sol, sol.conformal, args.level)
    rep.add(exact(f"calibration axioms P={cal.level}", len(check_calibration(cal))))
    rep.notes += cal.notes
    if args.invert:
        cal = transform_calibration(cal)
        rep.add(exact(f"transformed calibration P={cal.level}", len(check_calibration(cal))))
    if args.output:
        Path(args.output).write_text(format_calibration(cal))
        rep.notes.append(f"wrote {args.output}")
    return _emit(rep, args)


def cmd_hodograph(args) -> int:
    cal = read_calibration(Path(args.calibration))
    cfg = _config(args, cal)
    hs = hodograph_solve(cal, cfg, _guess(args, cal, cfg))
    logtau = tau_log(omega_table(cal), cfg, hs.v)
    if args.format == "tsv":
        print("quantity\tvalue")
        for i, x in enumerate(hs.v, 1):
            print(f"v{i}\t{x:.17g}")
        print(f"residual\t{hs.residual_norm:.3e}\nlog_tau\t{logtau:.17g}\niterations\t{hs.iterations}")
    else:
        print(f"command: {_command(args)}")
        print(f"times: {cfg.describe()}")
        print("v = (" + ", ".join(f"{x:.15g}" for x in hs.v) + ")")
        print(f"residual = {hs.residual_norm:.3e} after {hs.iterations} Newton steps")
        print(f"log tau = {logtau:.15g}")
    return 0 if hs.residual_norm <= 1e-12 else 1


def cmd_legendre(args) -> int:
    cal = read_calibration(Path(args.calibration))
    cal_hat = read_calibration(Path(args.calibration_hat))
    n = cal.n
    cmap = inversion_map(n, cal.sol.prefix, cal_hat.sol.prefix)
    rep = RunReport(_command(args))
    expected = invert_solution(cal.sol, cal_hat.sol.prefix, cmap=cmap)
    rep.add(exact("hatted file is the inversion", int(not (expected.F - cal_hat.sol.F).is_zero())))
    cfg = _config(args, cal)
    hs = hodograph_solve(cal, cfg, _guess(args, cal, cfg))
    lg = legendre_check(omega_table(cal), omega_table(cal_hat), cmap, cfg, hs.v)
    rep.notes.append(f"x = {lg.x:.15g}, hat x = {lg.hat_x:.15g}")
    rep.notes.append(f"log tau = {lg.logtau:.15g}, log tau-hat = {lg.logtau_hat_direct:.15g}")
    rep.add(numeric("Legendre two-sided", lg.two_sided, args.tol))
    rep.add(numeric("inverse Legendre", lg.roundtrip, args.tol))
    rep.add(numeric("hatted hodograph", lg.prop51_residual, args.tol))
    return _emit(rep, args)


def cmd_virasoro(args) -> int:
    cal = read_calibration(Path(args.calibration))
    cfg = _config(args, cal)
    rep = RunReport(_command(args))
    hs = hodograph_solve(cal, cfg, _guess(args, cal, cfg))
    if args.hat:
        cal_hat = transform_calibration(cal)
        cmap = inversion_map(cal.n, cal.sol.prefix, cal_hat.sol.prefix)
        cfg_h = transform_times(cfg, hat_x_of(cal, cfg, hs.v), cal.n)
        rep.notes.append(f"hatted times: {cfg_h.describe()}")
        L = build_virasoro(cal_hat, args.m)
        r = constraint_residual(L, omega_table(cal_hat), cfg_h, cmap.forward_point(hs.v))
    else:
        L = build_virasoro(cal, args.m)
        r = constraint_residual(L, omega_table(cal), cfg, hs.v)
    rep.notes.append(f"c0 = {L.c0} (excluded; residual with it: {r.residual_with_constant:.3e})")
    rep.add(numeric(f"{'hatted ' if args.hat else ''}L{args.m}", r.residual, args.tol))
    return _emit(rep, args)


def cmd_genus(args) -> int:
    rep = RunReport(_command(args))
    sol = read_solution(Path(args.solution))
    G = _load_G(args.G)
    op = args.op
    if op == "expand":
        series = abstract_series(args.order)
        vn = JetExpression(RationalFunction.variable(sol.coordinates[-1]))
        tilde = legendre_expand(series, vn)
        for g, t in enumerate(tilde, 1):
            rep.notes.append(f"F~{g} = {t}")
        bad = sum(int(not r.is_zero()) for r in recF_residual(series, tilde, vn))
        rep.add(exact("expansion equation re-substituted", bad, f"orders e^0..e^{args.order - 1}"))
        return _emit(rep, args)
    cmap = inversion_map(sol.n, sol.prefix)
    sol_hat = invert_solution(sol, cmap=cmap)
    if op == "genus1":
        rep.notes.append(f"F1 = {genus1(sol, G)}")
        g1 = check_G1(sol, sol_hat, cmap, G)
        rep.add(exact("G1 x-independent", int(not g1.x_independent)))
        rep.add(exact("G1 equals 1/2 log(-1)", int(not g1.equals_half_log_minus_one)))
    elif op == "det-identity":
        rep.add(exact("det identity", int(not check_det_identity(sol, sol_hat, cmap).is_zero())))
    elif op == "check-g2":
        if args.F2 is None:
            raise UsageError("check-g2 needs --F2 with the genus-two data")
        data = read_genus_data(Path(args.F2))
        F1 = data.get("F1") if data.get("F1") is not None else genus1(sol, G)
        F2 = data.get("F2")
        if data.get("F2hat_v") is not None:
            F2hat = data.get("F2hat_v")
        elif data.get("F2hat") is not None:
            F2hat = pull_back_hatted_jets(data.get("F2hat"), sol, cmap)
        else:
            F2hat = None
        if F2 is None or F2hat is None:
            raise UsageError("the --F2 file needs F2 and F2hat (or F2hat_v)")
        res = check_G2(F1, F2, F2hat, sol, cmap)
        rep.add(exact("F~2 - F^2 - G2", int(not res.is_zero()), "" if res.is_zero() else str(res)))
        const = G2_formula().subs({"vh2_1": 0, "vh2_2": 0})
        rep.add(exact("G2 at constant w", int(not const.is_zero())))
    return _emit(rep, args)


def cmd_verify_all(args) -> int:
    sol = read_solution(Path(args.solution))
    G = _load_G(args.G)
    rep = verify_all(sol, args.level, G=G, tolerances=_tolerances(args.tol),
                     log=lambda s: log.info("stage: %s", s), command=_command(args))
    return _emit(rep, args)


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wdvvkit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp):
        sp.add_argument("--format", choices=["text", "tsv"], default="text")

    def times(sp):
        sp.add_argument("--time", action="append", metavar="a,p=x", help="time t^{a,p} (repeatable)")
        sp.add_argument("--shift", action="append", metavar="a,p=c", help="shift c^{a,p} (repeatable)")
        sp.add_argument("--guess", metavar="v1,...,vn", help="Newton starting point")

    sp = sub.add_parser("check", help="WDVV and conformal checks of a solution file")
    sp.add_argument("solution")
    fmt(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("invert", help="apply the inversion symmetry")
    sp.add_argument("solution")
    sp.add_argument("-o", "--output", required=True, help="output solution file ('-' for stdout)")
    sp.add_argument("--hat-prefix", default="vh")
    fmt(sp)
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("calibrate", help="build and export a calibration")
    sp.add_argument("solution")
    sp.add_argument("-P", "--level", type=int, default=4)
    sp.add_argument("-o", "--output")
    sp.add_argument("--invert", action="store_true", help="export the transformed calibration instead")
    fmt(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("hodograph", help="solve the hodograph equations and evaluate log tau")
    sp.add_argument("calibration")
    times(sp)
    fmt(sp)
    sp.set_defaults(func=cmd_hodograph)

    sp = sub.add_parser("legendre-check", help="compare log tau-hat with the Legendre transform of log tau")
    sp.add_argument("calibration")
    sp.add_argument("calibration_hat")
    times(sp)
    sp.add_argument("--tol", type=float, default=1e-8)
    fmt(sp)
    sp.set_defaults(func=cmd_legendre)

    sp = sub.add_parser("virasoro", help="evaluate an L_{-1} or L_0 constraint on a hodograph tau function")
    sp.add_argument("calibration")
    sp.add_argument("-m", type=int, choices=[-1, 0], required=True)
    times(sp)
    sp.add_argument("--hat", action="store_true", help="use the inverted solution's tau function")
    sp.add_argument("--tol", type=float, default=1e-9)
    fmt(sp)
    sp.set_defaults(func=cmd_virasoro)

    sp = sub.add_parser("genus", help="genus-expansion checks")
    sp.add_argument("solution")
    sp.add_argument("--G", help="G-function file")
    sp.add_argument("--F2", help="genus-two data file (keys F2 and F2hat or F2hat_v, optional F1)")
    sp.add_argument("--op", choices=["genus1", "det-identity", "expand", "check-g2"], required=True)
    sp.add_argument("--order", type=int, default=3, help="highest genus for --op expand")
    fmt(sp)
    sp.set_defaults(func=cmd_genus)

    sp = sub.add_parser("verify-all", help="run every check end to end")
    sp.add_argument("solution")
    sp.add_argument("-P", "--level", type=int, default=4)
    sp.add_argument("--G", help="G-function file")
    sp.add_argument("--tol", action="append", metavar="name=value",
                    help="override a tolerance (newton, trivial, taudef, richardson, legendre, "
                         "prop51, roundtrip, virasoro, control)")
    fmt(sp)
    sp.set_defaults(func=cmd_verify_all)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, FileFormatError, ExpressionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LevelError as exc:
        print(f"error: {exc} (calibrate with a larger -P)", file=sys.stderr)
        return 2
    except (SolutionError, CalibrationError, HodographError) as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
