import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ultracoarse.metric_core import FiniteUltrametricSpace  # noqa: E402


@pytest.fixture
def abc():
    """{a, b, c} with d(a,b) = 1 and c at distance 3 from both."""
    return FiniteUltrametricSpace("abc", [[0, 1, 3], [1, 0, 3], [3, 3, 0]])


@pytest.fixture
def pqr():
    return FiniteUltrametricSpace("pqr", [[0, 1, 3], [1, 0, 3], [3, 3, 0]])


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
