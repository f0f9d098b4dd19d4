import numpy as np
import pytest

from vemlab.lab.shapes import SHAPES

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line for the acceptance summary."""

    def record(label, passed, detail=""):
        _ACCEPTANCE.append((label, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {label}" + (f" -- {detail}" if detail else ""))


@pytest.fixture(params=SHAPES)
def shape(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
