import numpy as np
import pytest

from comopt.grid import ElementField, UniformGrid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid2x2():
    return UniformGrid((0.0, 0.0), 1.0, (2, 2))


@pytest.fixture
def unit_square_grid():
    return UniformGrid((0.0, 0.0), 1.0 / 16, (16, 16))


def binary_field(grid, values):
    return ElementField(grid, np.asarray(values, dtype=np.int8),
                        "binary-design")
