import pytest

from maxleak.channels import bec, binary_joint, bsc


@pytest.fixture
def bsc_joint():
    return binary_joint(0.5, bsc(0.25))


@pytest.fixture
def bec_joint():
    return binary_joint(0.5, bec(0.5))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
