import numpy as np
import pytest

from uavcover.channel import ChannelEnvironment
from uavcover.coverage import CoverageParams


@pytest.fixture
def urban():
    return ChannelEnvironment.preset("urban")


@pytest.fixture
def urban_params(urban):
    return CoverageParams(urban)


def random_deployment(rng, n=9, length=5000.0, h_lo=100.0, h_hi=1000.0):
    xy = rng.uniform(0.0, length, size=(n, 2))
    h = rng.uniform(h_lo, h_hi, size=(n, 1))
    return np.hstack([xy, h])


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
