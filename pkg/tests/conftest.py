"""Collects the acceptance suite's PASS/FAIL lines and repeats them after the run."""

_LINES: list[str] = []


def record(line: str) -> None:
    _LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
