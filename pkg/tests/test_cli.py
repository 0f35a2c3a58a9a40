import subprocess
import sys

import pytest

from wdvvkit import data_path
from wdvvkit.cli import main
from wdvvkit.formats import read_solution

A2 = str(data_path("a2.wdvv"))
A3 = str(data_path("a3.wdvv"))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_pass_fail_and_skip(capsys, tmp_path):
    code, out, _ = run(capsys, "check", A3)
    assert code == 0 and "result: PASS" in out
    code, out, _ = run(capsys, "check", str(data_path("a3_perturbed.wdvv")))
    assert code == 1 and "violated (a,b,g,nu)" in out
    f = tmp_path / "nc.wdvv"
    f.write_text("n = 2\nF = 1/2*v1^2*v2 + v2^4/72\n")
    code, out, _ = run(capsys, "check", str(f))
    assert code == 0 and "skipped" in out


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "check", str(tmp_path / "missing.wdvv"))[0] == 2
    bad = tmp_path / "bad.wdvv"
    bad.write_text("n = 2\nF = 1/2*v1^2*v2 +\n")
    code, _, err = run(capsys, "check", str(bad))
    assert code == 2 and "line 2" in err
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "invert", A2)[0] == 2  # -o is required


def test_invert_to_file(capsys, tmp_path):
    out = tmp_path / "a2h.wdvv"
    assert run(capsys, "invert", A2, "-o", str(out))[0] == 0
    sol = read_solution(out)
    assert sol.prefix == "vh" and sol.conformal.d == 2 - read_solution(A2).conformal.d


@pytest.fixture(scope="module")
def cal_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cal")
    main(["calibrate", A2, "-P", "5", "-o", str(d / "a2.cal")])
    main(["calibrate", A2, "-P", "5", "--invert", "-o", str(d / "a2h.cal")])
    return str(d / "a2.cal"), str(d / "a2h.cal")


TIMES = ["--time", "1,0=0.3", "--time", "2,0=0.4", "--shift", "1,1=1"]


def test_hodograph_and_tsv(capsys, cal_files):
    code, out, _ = run(capsys, "hodograph", cal_files[0], *TIMES, "--format", "tsv")
    assert code == 0
    rows = dict(line.split("\t") for line in out.splitlines()[1:])
    assert float(rows["v1"]) == 0.3 and float(rows["v2"]) == 0.4
    assert run(capsys, "hodograph", cal_files[0], "--time", "3,0=1")[0] == 2


def test_legendre_and_virasoro(capsys, cal_files):
    assert run(capsys, "legendre-check", *cal_files, *TIMES)[0] == 0
    for m in ("-1", "0"):
        assert run(capsys, "virasoro", cal_files[0], "-m", m, *TIMES)[0] == 0
        assert run(capsys, "virasoro", cal_files[0], "-m", m, "--hat", *TIMES)[0] == 0


def test_level_too_low_is_usage_error(capsys, tmp_path):
    low = tmp_path / "low.cal"
    main(["calibrate", A2, "-P", "1", "-o", str(low)])
    capsys.readouterr()
    code, _, err = run(capsys, "virasoro", str(low), "-m", "0", "--hat", *TIMES)
    assert code == 2 and "-P" in err


def test_genus_ops(capsys):
    for op in ("genus1", "det-identity", "expand"):
        assert run(capsys, "genus", A2, "--op", op)[0] == 0
    assert run(capsys, "genus", A2, "--op", "genus1", "--G", str(data_path("a2.G")))[0] == 0


def test_tolerance_override_can_fail(capsys):
    code, out, _ = run(capsys, "verify-all", A2, "--tol", "richardson=100")
    assert code == 1 and "Richardson" in out


def test_verify_all_deterministic():
    cmd = [sys.executable, "-m", "wdvvkit.cli", "verify-all", A2, "--format", "tsv"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.returncode == 0
    assert a.stdout == b.stdout
    lines = a.stdout.decode().splitlines()
    assert lines[0].startswith("#command\t")
    assert lines[1].split("\t") == ["name", "mode", "residual", "tolerance", "pass", "detail"]
    assert all(len(line.split("\t")) == 6 for line in lines[2:] if not line.startswith("#"))
