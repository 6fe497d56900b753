import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


FULL_GRID_SEED = 1


@pytest.fixture(scope="session")
def full_linear_run():
    """Default 200-cell linear grid with 100 replicates (about a minute)."""
    from vimp import simlab

    return simlab.run_grid(simlab.GridSpec(base_seed=FULL_GRID_SEED), workers=1)
