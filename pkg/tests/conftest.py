import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import QuadratureConfig  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running experiment checks")


@pytest.fixture
def fast_cfg():
    """Lower rule orders for tests that run many quadratures"""
    return QuadratureConfig(hermite_order=24, legendre_order=16)


@pytest.fixture
def cfg():
    return QuadratureConfig()
