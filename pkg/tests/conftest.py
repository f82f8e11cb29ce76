import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_symmetric(rng, p, scale=1.0):
    m = rng.standard_normal((p, p)) * scale
    return (m + m.T) / 2.0
