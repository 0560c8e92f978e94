import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nlg.grid import Grid, ScalarField, square_flow  # noqa: E402


@pytest.fixture
def grid8():
    return Grid.unit_square(8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def linear_x(grid):
    X, _ = grid.cell_centers()
    return ScalarField(grid, X - 0.5 * grid.lengths[0])


@pytest.fixture
def square8(grid8):
    return square_flow(grid8)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
