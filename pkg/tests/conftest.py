import numpy as np
import pytest

from cesim.grid import Grid


@pytest.fixture
def grid16():
    return Grid(16, 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    for mod in list(sys.modules.values()):
        lines = getattr(mod, "_ACCEPTANCE_LINES", None)
        if lines:
            terminalreporter.section("acceptance criteria")
            for k in sorted(lines):
                terminalreporter.write_line(lines[k])
            break
