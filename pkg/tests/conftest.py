import numpy as np
import pytest

from sketchridge.measures import make_discrete, point_mass


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def isotropic():
    return point_mass(1.0)


@pytest.fixture
def two_level():
    """Half the eigenvalues at 2, half at 1."""
    return make_discrete([(2.0, 0.5), (1.0, 0.5)])
