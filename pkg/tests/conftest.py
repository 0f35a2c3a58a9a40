from functools import lru_cache

import pytest

from wdvvkit import data_path
from wdvvkit.calibration import build_calibration, omega_table, transform_calibration
from wdvvkit.formats import read_solution
from wdvvkit.inversion import inversion_map, invert_solution

EXAMPLES = ["a2", "i2_3", "i2_4", "i2_5", "a3"]


@lru_cache(maxsize=None)
def example(name: str):
    return read_solution(data_path(name + ".wdvv"))


@lru_cache(maxsize=None)
def setup(name: str, P: int):
    """Solution, inversion and calibrations on both sides at level ``P``."""
    sol = example(name)
    cmap = inversion_map(sol.n)
    sol_hat = invert_solution(sol, cmap=cmap)
    cal = build_calibration(sol, P=P)
    cal_hat = transform_calibration(cal, cmap, sol_hat)
    return {
        "sol": sol, "cmap": cmap, "sol_hat": sol_hat, "cal": cal, "cal_hat": cal_hat,
        "table": omega_table(cal), "table_hat": omega_table(cal_hat),
    }


@pytest.fixture(params=EXAMPLES)
def any_example(request):
    return example(request.param)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
