from dataclasses import dataclass
from typing import Optional

import numpy as np

from cnst import defaults


def noise_knots(count: int = defaults.NOISE_SCALING_KNOTS) -> np.ndarray:
    return np.linspace(0.0, defaults.SIGMA_MAX, count)


@dataclass(frozen=True, eq=False)
class NoiseScaling:
    """Linear spline s(sigma) on equispaced noise levels; alpha(sigma) = exp(s(sigma)) / (sigma + 1e-5)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if values.ndim != 1 or values.size < 2:
            raise ValueError("NoiseScaling needs at least two knot values")
        if not np.all(np.isfinite(values)):
            raise ValueError("NoiseScaling values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, s: float = 0.0, count: int = defaults.NOISE_SCALING_KNOTS) -> 'NoiseScaling':
        return cls(values=np.full(count, float(s)))

    @classmethod
    def calibrated(cls, alpha: float, sigma: float, count: int = defaults.NOISE_SCALING_KNOTS) -> 'NoiseScaling':
        """Constant scaling whose alpha equals ``alpha`` at noise level ``sigma``."""
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        return cls.constant(float(np.log(alpha * (sigma + defaults.ALPHA_SIGMA_OFFSET))), count)

    @property
    def knots(self) -> np.ndarray:
        return noise_knots(self.values.size)

    def interpolation_weights(self, sigma: float) -> np.ndarray:
        """Weights w with s(sigma) = w @ values, clamped outside the knot range."""
        _check_sigma(sigma)
        weights = np.zeros(self.values.size)
        eye = np.eye(self.values.size)
        for k in range(self.values.size):
            weights[k] = np.interp(sigma, self.knots, eye[k])
        return weights

    def s(self, sigma: float) -> float:
        _check_sigma(sigma)
        return float(np.interp(sigma, self.knots, self.values))

    def alpha(self, sigma: float) -> float:
        return float(np.exp(self.s(sigma)) / (sigma + defaults.ALPHA_SIGMA_OFFSET))

    def with_values(self, values: Optional[np.ndarray]) -> 'NoiseScaling':
        return NoiseScaling(values=self.values if values is None else values)


def noise_alpha(scaling: NoiseScaling, sigma: float) -> float:
    return scaling.alpha(sigma)


def _check_sigma(sigma: float) -> None:
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError(f"sigma must be finite and non-negative, got {sigma}")
