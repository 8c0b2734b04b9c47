import os

import pytest

# one line per acceptance criterion, filled by tests/test_acceptance.py
CRITERIA: dict = {}


def record(number: int, passed: bool, text: str) -> None:
    prev = CRITERIA.get(number)
    if prev is not None:
        passed = passed and prev[0]
        text = prev[1] + "; " + text
    CRITERIA[number] = (passed, text)


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        passed, text = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {text}")


FULL = os.environ.get("BAYESMAG_FULL") == "1"
