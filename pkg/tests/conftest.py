import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "lucewalks",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lucewalks")


@pytest.fixture
def rng():
    from lucewalks import RngStream

    return RngStream(20260814)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20260814)
