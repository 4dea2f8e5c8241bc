import numpy as np
import pytest

from utils.numerics import radial_grid
from utils.potentials import gaussian


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_grid():
    return radial_grid(20.0, 256)


@pytest.fixture
def weak_gaussian():
    return gaussian(amplitude=0.5, scale=1.0)


@pytest.fixture(autouse=True)
def _two_threads(monkeypatch):
    monkeypatch.setenv("SCATTERING_LAB_THREADS", "2")
