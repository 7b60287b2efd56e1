from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

from probelight.synth import make_synthetic_env


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def small_env():
    """32-px synthetic environment shared by the cheap geometry tests."""
    return make_synthetic_env(height=32, seed=1)


@pytest.fixture(scope="session")
def lit_env():
    """Environment with a 40x-peak light blob, for HDR-sensitive tests."""
    return make_synthetic_env(height=32, seed=4, light_peak=40.0)
