import numpy as np
import pytest

from idsrecon.channel import ChannelParams
from idsrecon.core import Alphabet

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def binary():
    return Alphabet.of_size(2)


@pytest.fixture
def dataset_params():
    return ChannelParams(0.017, 0.02, 0.022)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
