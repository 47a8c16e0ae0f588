import logging

import numpy as np

from cnst import defaults
from filters.filter_bank import DEFAULT_NORM_GRID, FilterBank
from potentials.spline_potential import SplinePotential
from regularizer.adaptive_regularizer import AdaptiveRegularizer, build_regularizer

logger = logging.getLogger(__name__)

INITIAL_SCALING = float(np.log(0.25))


def default_model(n_channels: int = 8, kernel_size: int = 5, knot_count: int = defaults.KNOT_COUNT,
                  spacing: float = defaults.KNOT_SPACING, c_cvx: int = 0, mu: float = 1.0,
                  sigma: float = 25.0 / 255.0) -> AdaptiveRegularizer:
    """DCT filters with unit norm, psi_plus'' = 1 and constant noise scalings."""
    bank = FilterBank.dct(n_channels, kernel_size).normalize_spectral(DEFAULT_NORM_GRID)
    potential = SplinePotential.create(mu=mu, c_cvx=c_cvx, knot_count=knot_count, spacing=spacing)
    logger.info(f"Initialized {n_channels}-channel model with {kernel_size}x{kernel_size} kernels (c_cvx={c_cvx})")
    return build_regularizer(bank, potential, INITIAL_SCALING, sigma)
