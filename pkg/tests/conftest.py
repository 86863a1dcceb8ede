import pytest

_REPORT: list[str] = []


@pytest.fixture
def report():
    """Record a one-line verdict; all verdicts are repeated in the terminal summary."""

    def emit(criterion: int, passed: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _REPORT.append(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
