import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from suptest import supervisor


@pytest.fixture
def m0():
    from helpers import m0 as make
    return make()


@pytest.fixture(scope="session")
def welding_cell_path():
    from importlib.resources import files
    return str(files("suptest").joinpath("data/welding-cell.cb"))


@pytest.fixture(scope="session")
def welding_cell(welding_cell_path):
    return supervisor.load_behavior(welding_cell_path)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "RECORDED_LINES", None)
    if lines:
        terminalreporter.section("qualification record")
        for line in lines:
            terminalreporter.write_line(line)
