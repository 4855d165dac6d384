import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from copulamix.grid import Grid

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid():
    return Grid.midpoint(512)


@pytest.fixture(scope="session")
def small_grid():
    return Grid.midpoint(128)


@pytest.fixture(scope="session")
def gl_grid():
    return Grid.gauss_legendre(512)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
