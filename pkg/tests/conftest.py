import pytest

from nucflex import scenario_io
from nucflex.kinetics import NuclideParams
from nucflex.lookup import FlexibilityTable

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def params():
    return NuclideParams()


@pytest.fixture(scope="session")
def shipped_table(params):
    return FlexibilityTable.read(scenario_io.preset_dir() / "ap1000_table.csv")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
