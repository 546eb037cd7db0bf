import pytest

_LINES = {}


@pytest.fixture
def criterion():
    """Log one PASS/FAIL line for an acceptance criterion; returns the flag."""

    def log(number, title, ok, detail):
        line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(line)
        _LINES[number] = line
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
