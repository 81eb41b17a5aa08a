import numpy as np
import pytest

from gridcop.copula import GridCopula
from gridcop.grid import uniform_grid


@pytest.fixture
def g22():
    return uniform_grid(2, 2)


@pytest.fixture
def checkerboard(g22):
    return GridCopula(g22, [[0.5, 0.0], [0.0, 0.5]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion, then assert."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def report(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
