import numpy as np
import pytest
from hypothesis import settings

from mirrorsim import presets
from mirrorsim._kernels import warm_up

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def _compiled():
    warm_up()


@pytest.fixture
def paper():
    return presets.paper_oscillator()


@pytest.fixture
def scaled():
    return presets.scaled_oscillator()


@pytest.fixture
def env():
    return presets.paper_environment()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
