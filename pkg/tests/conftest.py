import numpy as np
import pytest

from thermocap import Distribution, StochasticChannel


def random_distribution(rng, dim, allow_zeros=False):
    if allow_zeros and rng.random() < 0.3:
        probs = rng.dirichlet(np.ones(dim))
        kill = rng.integers(0, dim)
        probs[kill] = 0.0
        probs /= probs.sum()
        return Distribution(probs)
    return Distribution(rng.dirichlet(np.ones(dim)))


def random_channel(rng, dim_in, dim_out):
    cols = rng.dirichlet(np.ones(dim_out), size=dim_in)
    return StochasticChannel(cols.T)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
