"""Collects the one-line verdicts of the acceptance criteria and prints them at the end of the run."""

import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    def record(number: int, passed: bool, detail: str):
        line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'} -- {detail}"
        _VERDICTS.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS):
        terminalreporter.write_line(line)
