import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# (criterion, line) pairs filled by test_acceptance, printed at session end
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def wave():
    from risloc import Wave
    return Wave(2.4e9)
