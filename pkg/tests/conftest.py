import numpy as np
import pytest

from filters.filter_bank import FilterBank, dirac_kernel
from potentials.spline_potential import SplinePotential
from regularizer.adaptive_regularizer import unit_alpha_regularizer


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_bank():
    return FilterBank.dct(n_channels=3, kernel_size=3).normalize_spectral((16, 16))


@pytest.fixture
def dirac_bank():
    return FilterBank(dirac_kernel(1))


@pytest.fixture
def quadratic_potential():
    """psi(t) = t^2 / 2 on [-50, 50]."""
    return SplinePotential.create(knot_count=101, spacing=1.0)


@pytest.fixture
def quadratic_model(small_bank, quadratic_potential):
    return unit_alpha_regularizer(small_bank, quadratic_potential)


def _dense_gram(bank: FilterBank, shape) -> np.ndarray:
    """sum_c W_c^T W_c as a dense matrix."""
    n = shape[0] * shape[1]
    gram = np.zeros((n, n))
    for c in range(bank.n_channels):
        matrix = bank.channel_matrix(c, shape)
        gram += matrix.T @ matrix
    return gram


@pytest.fixture
def dense_gram():
    return _dense_gram
