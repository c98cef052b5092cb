"""Collects the one-line verdicts of the acceptance suite and repeats them
in the terminal summary, so they show up in a plain ``pytest -v`` run."""

import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    def record(number: int, ok: bool, text: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {text}"
        VERDICTS.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
