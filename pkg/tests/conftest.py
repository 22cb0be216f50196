import numpy as np
import pytest

from oddm.params import OddmParams
from oddm.pulse import srrc_pulse


@pytest.fixture(scope="session")
def desk():
    return OddmParams.desk()


@pytest.fixture(scope="session")
def desk_pulse(desk):
    return srrc_pulse(desk)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_grid(rng, params):
    from oddm.params import qam_map, random_bits

    return qam_map(random_bits(rng, params), params)
