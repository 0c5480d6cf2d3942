import os

import pytest
from hypothesis import HealthCheck, settings

from whspace.params import SigmaRegistry, build_params
from whspace import estimates, acceptance

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def toy():
    return build_params(estimates.TOY)


@pytest.fixture(scope="session")
def gap_params():
    return build_params(acceptance.GAP_TOY)


@pytest.fixture(scope="session")
def sigma_params():
    return build_params(acceptance.SIGMA_TOY)


@pytest.fixture(scope="session")
def strict4():
    return build_params({"mode": "strict", "levels": 4})


@pytest.fixture
def registry(toy):
    return SigmaRegistry(toy)
