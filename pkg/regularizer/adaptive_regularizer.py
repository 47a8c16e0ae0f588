import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cnst import defaults
from filters.filter_bank import FilterBank
from potentials.noise_scaling import NoiseScaling
from potentials.spline_potential import SplinePotential
from regularizer.mask import SpatialMask


class AdaptiveRegularizer:
    """Masked ridge regularizer R_y(x) = sum_c <Lambda_c, psi_c(W_c x)>.

    psi_c(t) = alpha_c^-2 psi(alpha_c t) with alpha_c = alpha_c(sigma). Without a
    mask every weight is 1.
    """

    def __init__(self, bank: FilterBank, potential: SplinePotential, noise_scalings: Sequence[NoiseScaling],
                 sigma: float = 25.0 / 255.0, mask: Optional[SpatialMask] = None):
        self.logger = logging.getLogger(__name__)
        if len(noise_scalings) != bank.n_channels:
            raise ValueError(f"Expected {bank.n_channels} noise scalings, got {len(noise_scalings)}")
        if mask is not None and mask.n_channels != bank.n_channels:
            raise ValueError(f"Mask has {mask.n_channels} channels, bank has {bank.n_channels}")
        if not np.isfinite(sigma) or sigma < 0:
            raise ValueError(f"sigma must be finite and non-negative, got {sigma}")
        self.bank = bank
        self.potential = potential
        self.noise_scalings: List[NoiseScaling] = list(noise_scalings)
        self.sigma = float(sigma)
        self.mask = mask
        self.alphas = np.array([scaling.alpha(self.sigma) for scaling in self.noise_scalings])

    @property
    def n_channels(self) -> int:
        return self.bank.n_channels

    def with_mask(self, mask: Optional[SpatialMask]) -> 'AdaptiveRegularizer':
        return AdaptiveRegularizer(self.bank, self.potential, self.noise_scalings, self.sigma, mask)

    def with_sigma(self, sigma: float) -> 'AdaptiveRegularizer':
        return AdaptiveRegularizer(self.bank, self.potential, self.noise_scalings, sigma, self.mask)

    def with_potential(self, potential: SplinePotential) -> 'AdaptiveRegularizer':
        return AdaptiveRegularizer(self.bank, potential, self.noise_scalings, self.sigma, self.mask)

    def with_noise_scalings(self, noise_scalings: Sequence[NoiseScaling]) -> 'AdaptiveRegularizer':
        return AdaptiveRegularizer(self.bank, self.potential, noise_scalings, self.sigma, self.mask)

    def weights(self, shape: Tuple[int, int]) -> np.ndarray:
        if self.mask is None:
            return np.ones((self.n_channels,) + tuple(shape))
        if tuple(self.mask.shape) != tuple(shape):
            raise ValueError(f"Mask shape {tuple(self.mask.shape)} does not match image shape {tuple(shape)}")
        return self.mask.weights

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"Regularizer expects a 2D image, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("Regularizer input must be finite")
        return x

    def channel_terms(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Filter responses with the scaled potential's value, slope and curvature per channel."""
        x = self._check(x)
        responses = self.bank.apply(x)
        values = np.empty_like(responses)
        slopes = np.empty_like(responses)
        curvatures = np.empty_like(responses)
        for c in range(self.n_channels):
            values[c], slopes[c], curvatures[c] = self.potential.scaled_eval(self.alphas[c], responses[c])
        return responses, values, slopes, curvatures

    def cost_map(self, x: np.ndarray) -> np.ndarray:
        _, values, _, _ = self.channel_terms(x)
        return (self.weights(np.shape(x)) * values).sum(axis=0)

    def evaluate(self, x: np.ndarray) -> float:
        return float(self.cost_map(x).sum())

    def gradient(self, x: np.ndarray) -> np.ndarray:
        _, _, slopes, _ = self.channel_terms(x)
        return self.bank.apply_adjoint(self.weights(np.shape(x)) * slopes)

    def curvature_weights(self, x: np.ndarray) -> np.ndarray:
        _, _, _, curvatures = self.channel_terms(x)
        return self.weights(np.shape(x)) * curvatures

    def hessian_vector(self, x: np.ndarray, v: np.ndarray, curvature_weights: Optional[np.ndarray] = None) -> np.ndarray:
        if curvature_weights is None:
            curvature_weights = self.curvature_weights(x)
        return self.bank.apply_adjoint(curvature_weights * self.bank.apply(v))

    def lipschitz_gradient_bound(self, grid_shape: Tuple[int, int]) -> float:
        """sum_c sup|psi''| * ||W_c||^2; psi_c'' = psi''(alpha_c t), so alpha_c does not enter.

        The power-iteration norms carry the same margin as operator norm estimates.
        """
        norms = defaults.NORM_MARGIN * self.bank.channel_norms(grid_shape)
        return float(self.potential.max_abs_second_deriv * np.sum(norms ** 2))

    def max_first_derivs(self) -> np.ndarray:
        """sup|psi_c'| per channel."""
        return self.potential.max_abs_first_deriv / self.alphas


def build_regularizer(bank: FilterBank, potential: SplinePotential, s_value: float = float(np.log(0.25)),
                      sigma: float = 25.0 / 255.0, mask: Optional[SpatialMask] = None) -> AdaptiveRegularizer:
    scalings = [NoiseScaling.constant(s_value) for _ in range(bank.n_channels)]
    return AdaptiveRegularizer(bank, potential, scalings, sigma, mask)


def unit_alpha_regularizer(bank: FilterBank, potential: SplinePotential, sigma: float = 0.0,
                           mask: Optional[SpatialMask] = None) -> AdaptiveRegularizer:
    """Regularizer whose every alpha_c equals 1 at ``sigma``."""
    scalings = [NoiseScaling.calibrated(1.0, sigma) for _ in range(bank.n_channels)]
    return AdaptiveRegularizer(bank, potential, scalings, sigma, mask)


def zero_regularizer(bank: FilterBank, knot_count: int = defaults.KNOT_COUNT,
                     spacing: float = defaults.KNOT_SPACING) -> AdaptiveRegularizer:
    return unit_alpha_regularizer(bank, SplinePotential.zero(knot_count, spacing))
