import re

import numpy as np
import pytest

from rydgate.model import DIM_PAIR, IDX, PhysicalParams

_CRITERIA: dict[int, list[str]] = {}
_NOTES: dict[int, list[str]] = {}


def ket(label: str) -> np.ndarray:
    psi = np.zeros(DIM_PAIR, dtype=complex)
    psi[IDX[label]] = 1.0
    return psi


@pytest.fixture
def note():
    """``note(n, text)`` attaches a measured value to criterion ``n`` in the summary."""
    def add(n: int, text: str) -> None:
        _NOTES.setdefault(n, []).append(text)
    return add


@pytest.fixture
def fig2_params():
    return PhysicalParams(omega=50.0, delta=50.0, v_r=25.0, tau=0.25)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok = all(outcome == "passed" for outcome in _CRITERIA[n])
        detail = "; ".join(_NOTES.get(n, []))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
