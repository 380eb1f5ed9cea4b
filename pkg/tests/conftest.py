from __future__ import annotations

import pytest

CRITERION_LINES: list[str] = []


@pytest.fixture
def report_criterion():
    def _report(res):
        line = res.line()
        print(line)
        CRITERION_LINES.append(line)
        return res
    return _report


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
