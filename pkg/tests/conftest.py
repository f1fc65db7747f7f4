import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from markgof import BoundaryCoxConfig, NullMarkDistribution, make_bins

settings.register_profile(
    "ci",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def rng():
    return np.random.default_rng(20130214)


@pytest.fixture
def bins8():
    return make_bins(8)


@pytest.fixture
def null8(bins8):
    return NullMarkDistribution.uniform(bins8)


@pytest.fixture
def boolean_config():
    """Boolean-model configuration of the simulation study."""
    return BoundaryCoxConfig(germ_intensity=1.5e-4)
