import pytest

from qdat.grid import SpacetimeGrid

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return SpacetimeGrid.default()


@pytest.fixture(scope="session")
def small_grid():
    return SpacetimeGrid.uniform(4.0, 8, -1.5, 1.5, 17)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
