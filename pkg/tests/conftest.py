import pytest

_LINES = []


@pytest.fixture
def acceptance_log():
    return _LINES


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
