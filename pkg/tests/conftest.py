"""Shared pytest wiring: the acceptance tests push one PASS line each onto
a session log, printed in the terminal summary so capture cannot swallow
it.  A failed criterion never reaches the log; its FAILED entry in the
regular test listing is the fail line."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
