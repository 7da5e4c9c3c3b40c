import numpy as np
import pytest

from cfisac.model import NetworkConfig, draw_realization
from cfisac.precoding import pzf_grouping


@pytest.fixture(scope="session")
def small_config():
    return NetworkConfig(M=8, N=8, K=4, L=2, tau_t=6, rng_seed=3)


@pytest.fixture(scope="session")
def small_instance(small_config):
    real = draw_realization(small_config)
    grouping = pzf_grouping(real.beta, small_config.varrho_percent, small_config.N)
    return small_config, real, grouping


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
