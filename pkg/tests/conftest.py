import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# numerical property tests legitimately take milliseconds per example;
# the default deadline trips on shared CI boxes
settings.register_profile("numeric", deadline=None,
                          suppress_health_check=(HealthCheck.too_slow,))
settings.load_profile("numeric")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
