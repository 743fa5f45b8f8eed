import pytest

from aloha_diffusion import GameConfig, RegionSpec

DEMANDS = (8 / 15, 1 / 15)
GOOD = RegionSpec(((0.65, 0.82), (0.18, 0.35)), "good")


def decr(upper=0.85, eta=1.0, lower=0.05, w=1.0):
    return GameConfig.symmetric_range(DEMANDS, lower, upper, eta, "throughput_decreasing", w)


def idle(eta=0.3, lower=0.0, upper=0.9, w=1.0):
    return GameConfig.symmetric_range(DEMANDS, lower, upper, eta, "idle_time", w)


@pytest.fixture
def decr085():
    return decr()


@pytest.fixture
def idle090():
    return idle()


@pytest.fixture
def good():
    return GOOD
