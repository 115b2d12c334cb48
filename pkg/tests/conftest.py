import numpy as np
import pytest

from paraspec import TorusFlow, build_grid


@pytest.fixture
def grid_pi3():
    return build_grid(np.pi, 3)


@pytest.fixture
def grid_pi99():
    return build_grid(np.pi, 99)


@pytest.fixture
def unit_driver():
    return TorusFlow(np.array([1.0]), np.array([0.0]))
