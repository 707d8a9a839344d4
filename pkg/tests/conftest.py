import numpy as np
import pytest

from hallbraid import GridSpec, ModelParams, SpectralField, enforce_symmetry


def random_field(grid: GridSpec, rng, scale=1.0, time=0.0) -> SpectralField:
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    c[grid.nyquist_row()] = 0
    return enforce_symmetry(SpectralField(grid, scale * c, time))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def params():
    return ModelParams(alpha=1.0, beta=0.5, gamma=1.0)
