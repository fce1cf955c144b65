import numpy as np
import pytest

from cohdist.hermat import random_density, random_statevector


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_diag_dominant(dim, rng):
    """Random state with a strictly positive diagonal (generic support)."""
    rho = random_density(dim, rng)
    assert np.min(np.diag(rho).real) > 0
    return rho


__all__ = ["random_density", "random_statevector", "random_diag_dominant"]
