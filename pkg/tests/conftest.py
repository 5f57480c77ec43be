import pytest

from occ_urllc.calibration import calibrate
from occ_urllc.config import Scenario


@pytest.fixture(scope="session")
def literal():
    return Scenario()


@pytest.fixture(scope="session")
def calibrated():
    return calibrate(Scenario())


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
