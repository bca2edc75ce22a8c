import numpy as np
import pytest

from lyapboussinesq.grid import build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid8():
    return build_grid(0.0, 1.0, 8, 0.25, 1.0, 1.0)
