import numpy as np
import pytest

from infinipatch import init_weights, preset
from infinipatch.verify import noisy_weights

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cfg():
    return preset("test")


@pytest.fixture(scope="session")
def weights(cfg):
    return init_weights(cfg, 0)


@pytest.fixture(scope="session")
def noisy(cfg):
    return noisy_weights(cfg, 3, np.random.default_rng(3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
