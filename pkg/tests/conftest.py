import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ptaltv.systems import catalog_get  # noqa: E402

CATALOG_PARAMS = {
    "paper-example": {"tau": 10.0, "alpha": 0.1},
    "remark1-oscillating": {"tau": 1.0},
    "remark2-diagonal": {"tau": 1.0},
    "scalar-power": {"tau": 1.0, "k": 2.0},
    "symmetric-demo": {"tau": 1.0},
}

_criteria: list[tuple[str, str]] = []


@pytest.fixture
def paper_system():
    return catalog_get("paper-example", CATALOG_PARAMS["paper-example"])


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        doc = report.nodeid.split("::")[-1]
        _criteria.append((doc, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _criteria:
        terminalreporter.write_line(f"[{status}] {name}")
