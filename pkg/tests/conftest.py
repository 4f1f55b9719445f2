import json
from pathlib import Path

import pytest

from zetagap.optimize import get_basis

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def basis():
    """Symbolic (u, theta) moment constants for r = 1, P = 1; shared by every test."""
    return get_basis(1, 0)


@pytest.fixture(scope="session")
def constants(basis):
    return basis.constants([1])


@pytest.fixture(scope="session")
def golden_constants():
    return json.loads((GOLDEN / "moment_constants_r1_p1.json").read_text())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
