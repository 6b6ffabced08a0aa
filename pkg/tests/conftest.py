"""Shared pytest wiring.

The acceptance tests print one PASS/FAIL line per criterion. Default output
capture swallows prints on green runs, so the lines are recorded here and
echoed in the terminal summary where plain `pytest -v` shows them.
"""

_criterion_lines = []


def record_criterion(line):
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
