import numpy as np
import pytest

from hstvflow import kernels
from hstvflow.spectral import Grid, SpectralCache

BACKENDS = sorted(kernels.BACKENDS)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def experiment_grid():
    return Grid.cell_centred(-10.0, 10.0, 0.1)


def make_cache(n, h=1.0, s=0.0):
    return SpectralCache(Grid(n, h), s)
