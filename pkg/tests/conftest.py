"""Shared pytest hooks: collect acceptance lines and echo them at the end."""

from typing import List

ACCEPTANCE_LINES: List[str] = []


def record_acceptance(line: str) -> None:
    """Queue one summary line for the end-of-run acceptance section."""
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
