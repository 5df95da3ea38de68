import numpy as np
import pytest

from sympres.spline import PRESETS, preset


@pytest.fixture(scope="session")
def splines():
    return {name: preset(name) for name in PRESETS}


@pytest.fixture(scope="session")
def medium(splines):
    return splines["medium"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one status line per acceptance criterion for the summary."""

    def log(line):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
