import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "droplet", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("droplet")


@pytest.fixture
def unit_v0():
    """V0 for which the equilibrium radius is exactly 1."""
    return math.pi / 4


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
