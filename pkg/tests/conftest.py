import numpy as np
import pytest

from mamec import default_params


@pytest.fixture
def params_small():
    """Reduced system for fast solver tests."""
    return default_params(m_antennas=2, k_wds=2, l_paths=4)


@pytest.fixture
def params_default():
    return default_params()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
