import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Append one verdict line; the lines are repeated in the terminal summary."""
    def add(line: str):
        _LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
