"""
Shared pytest configuration for grasmle.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: acceptance-scale sweeps (deselect with '-m \"not slow\"')"
    )


@pytest.fixture
def rng():
    """Seeded generator; every test gets the same stream."""
    return np.random.default_rng(12345)


@pytest.fixture
def rng_factory():
    """Build independent seeded generators inside a test."""
    def make(seed: int = 0) -> np.random.Generator:
        return np.random.default_rng(seed)
    return make
