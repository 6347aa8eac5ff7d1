"""
Shared fixtures for the universim test suite
"""

import numpy as np
import pytest
from loguru import logger

from universim import distributions as dist


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance sweeps at full resolution")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def unit_uniform():
    return dist.uniform(0.0, 1.0)


@pytest.fixture
def standard_normal():
    return dist.normal(0.0, 1.0)


@pytest.fixture
def bern07():
    return dist.bernoulli(0.7)


@pytest.fixture
def random_pmf(rng):
    """Factory for strictly positive pmfs on {0, ..., size-1}"""

    def make(size: int) -> dist.DiscretePmf:
        probs = rng.dirichlet(np.ones(size)) + 1e-3
        return dist.DiscretePmf(np.arange(size, dtype=float), probs / probs.sum())

    return make


@pytest.fixture
def quiet_logger():
    """Drop every loguru sink a test installs"""
    yield
    logger.remove()
