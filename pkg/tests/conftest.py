import numpy as np
import pytest

from nlparax import ModelCoefficients


@pytest.fixture
def coeff():
    # deliberately anisotropic constants so algebra slips show up
    return ModelCoefficients(c=1.3, rho0=0.9, gamma=1.4, nu=0.2, eps=0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
