import numpy as np
import pytest

from dc_split.mesh import triangulate_grid
from dc_split.presets import SQUARE

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def square():
    return np.array(SQUARE)


@pytest.fixture(scope="session")
def mesh17(square):
    return triangulate_grid(square, 17, 17)


@pytest.fixture(scope="session")
def criterion_log():
    """Collects one pass/fail line per acceptance criterion for the summary."""
    return _ACCEPTANCE_LINES


def rng(*seed):
    return np.random.default_rng(list(seed))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
