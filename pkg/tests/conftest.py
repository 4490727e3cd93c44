import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from biotpicard.mesh import build_unit_mesh
from biotpicard.operators import BiotOperators

settings.register_profile("suite", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ops_cache():
    cache = {}

    def get(dimension, n):
        if (dimension, n) not in cache:
            cache[dimension, n] = BiotOperators(build_unit_mesh(dimension, n))
        return cache[dimension, n]

    return get
