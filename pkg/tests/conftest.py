import os
import pathlib

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gammafrac.material import DamageLaw, ElasticTensor

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")


@pytest.fixture
def A1():
    return ElasticTensor.scaled_identity(1.0)


@pytest.fixture
def law1():
    return DamageLaw.quadratic(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scenario_dir():
    return pathlib.Path(SCENARIOS).resolve()
