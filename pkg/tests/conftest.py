import pytest
from hypothesis import HealthCheck, settings

from bphzkit import Grid, generate_B, preset, sample_noise
from bphzkit.kernels import mollify

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def gpam():
    """(rule, params, family) for the d=2 preset."""
    rule, params = preset("gpam_2")
    return rule, params, generate_B(rule, params)


@pytest.fixture(scope="session")
def phi4():
    """(rule, params, family) for the d=3 preset."""
    rule, params = preset("phi4_3")
    return rule, params, generate_B(rule, params)


@pytest.fixture(scope="session")
def grid2():
    return Grid(2, 8, 8)


@pytest.fixture(scope="session")
def noise2(grid2):
    return mollify(3, sample_noise(grid2, "gaussian-white", 11, 0))
