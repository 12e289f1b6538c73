import time

import pytest

from sluice_ops.config import build_scenario, build_system, read_config
from sluice_ops.tide_control import Mode, run_scenario

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def case_cfg():
    return read_config("test_case")


@pytest.fixture(scope="session")
def case_system(case_cfg):
    return build_system(case_cfg)


@pytest.fixture(scope="session")
def timed_case_runs(case_cfg, case_system):
    """Every (mode, m) scenario of the built-in test case and the wall time they took."""
    runs = {}
    t0 = time.perf_counter()
    for m in range(1, case_system.n + 1):
        for mode in Mode:
            sc = build_scenario(case_cfg, case_system, mode.value, m)
            runs[mode, m] = run_scenario(case_system, sc)
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def case_runs(timed_case_runs):
    return timed_case_runs[0]


@pytest.fixture
def verdict():
    """Record the one-line verdict of an acceptance criterion."""
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
