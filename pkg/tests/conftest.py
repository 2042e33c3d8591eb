import pytest

from odrp.network import line_network
from odrp.params import Params


@pytest.fixture
def line4():
    return line_network(4)


@pytest.fixture
def params():
    return Params()


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
