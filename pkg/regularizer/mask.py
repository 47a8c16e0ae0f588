import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import expit

from cnst import defaults
from cnst.mask_kind import MaskKind
from filters.filter_bank import FilterBank
from util.grid_io import read_grid


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")


@dataclass(eq=False)
class SpatialMask:
    weights: np.ndarray
    epsilon: float = defaults.MASK_EPSILON

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 3:
            raise ValueError(f"Mask weights must have shape (channels, h, w), got {self.weights.shape}")
        if np.any(self.weights < self.epsilon) or np.any(self.weights > 1.0):
            raise ValueError(f"Mask weights must lie in [{self.epsilon}, 1]")

    @classmethod
    def ones(cls, n_channels: int, shape, epsilon: float = defaults.MASK_EPSILON) -> 'SpatialMask':
        return cls(weights=np.ones((n_channels,) + tuple(shape)), epsilon=epsilon)

    @property
    def n_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def shape(self):
        return self.weights.shape[1:]


def average_mask(mask: SpatialMask) -> np.ndarray:
    """Channel sum of the mask weights."""
    return mask.weights.sum(axis=0)


class MaskProvider(ABC):
    kind: MaskKind

    @abstractmethod
    def make(self, x_est: np.ndarray, bank: FilterBank, epsilon: float) -> SpatialMask:
        pass

    def parameter_jacobians(self, x_est: np.ndarray, bank: FilterBank, epsilon: float) -> Dict[str, np.ndarray]:
        return {}

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}

    def with_parameters(self, params: Dict[str, np.ndarray]) -> 'MaskProvider':
        return self


class ConstantMaskProvider(MaskProvider):
    kind = MaskKind.CONSTANT

    def make(self, x_est: np.ndarray, bank: FilterBank, epsilon: float) -> SpatialMask:
        _check_epsilon(epsilon)
        return SpatialMask.ones(bank.n_channels, np.shape(x_est), epsilon)


class FileMaskProvider(MaskProvider):
    kind = MaskKind.FILE

    def __init__(self, path: str):
        self.path = path
        self.logger = logging.getLogger(__name__)

    def make(self, x_est: np.ndarray, bank: FilterBank, epsilon: float) -> SpatialMask:
        _check_epsilon(epsilon)
        grid = read_grid(self.path)
        weights = grid.data
        if weights.shape[1:] != np.shape(x_est):
            raise ValueError(f"Mask file {self.path} has shape {weights.shape[1:]}, image is {np.shape(x_est)}")
        if grid.channels == 1:
            weights = np.repeat(weights, bank.n_channels, axis=0)
        elif grid.channels != bank.n_channels:
            raise ValueError(f"Mask file {self.path} has {grid.channels} channels, bank has {bank.n_channels}")
        clamped = np.clip(weights, epsilon, 1.0)
        if np.any(clamped != weights):
            self.logger.info(f"Clamped mask values from {self.path} into [{epsilon}, 1]")
        return SpatialMask(weights=clamped, epsilon=epsilon)


@dataclass(eq=False)
class LocalResponseMaskProvider(MaskProvider):
    """Mask that drops where smoothed filter magnitudes exceed a per-channel threshold.

    m_c = eps + (1 - eps) * expit(-gain * (box(|W_c x_est|) - threshold - offsets[c]))
    """

    gain: float = 10.0
    threshold: float = 0.1
    smoothing_width: int = 3
    offsets: Optional[np.ndarray] = None
    kind: MaskKind = field(default=MaskKind.LOCAL_RESPONSE, init=False)

    def __post_init__(self):
        if self.smoothing_width < 1:
            raise ValueError(f"smoothing_width must be >= 1, got {self.smoothing_width}")
        if self.offsets is not None:
            self.offsets = np.asarray(self.offsets, dtype=float)

    def _offsets(self, n_channels: int) -> np.ndarray:
        if self.offsets is None:
            return np.zeros(n_channels)
        if self.offsets.shape != (n_channels,):
            raise ValueError(f"Expected {n_channels} threshold offsets, got {self.offsets.shape}")
        return self.offsets

    def _logistic(self, x_est: np.ndarray, bank: FilterBank):
        x_est = np.asarray(x_est, dtype=float)
        if not np.all(np.isfinite(x_est)):
            raise ValueError("Mask estimate must be finite")
        smoothed = np.stack([uniform_filter(np.abs(r), size=self.smoothing_width, mode="nearest")
                             for r in bank.apply(x_est)])
        centred = smoothed - (self.threshold + self._offsets(bank.n_channels))[:, None, None]
        return expit(-self.gain * centred), centred

    def make(self, x_est: np.ndarray, bank: FilterBank, epsilon: float) -> SpatialMask:
        _check_epsilon(epsilon)
        logistic, _ = self._logistic(x_est, bank)
        weights = np.clip(epsilon + (1.0 - epsilon) * logistic, epsilon, 1.0)
        return SpatialMask(weights=weights, epsilon=epsilon)

    def parameter_jacobians(self, x_est: np.ndarray, bank: FilterBank, epsilon: float) -> Dict[str, np.ndarray]:
        """Pixelwise derivatives of the weights; ``offsets`` holds d m_c / d offsets[c] in channel c."""
        logistic, centred = self._logistic(x_est, bank)
        slope = (1.0 - epsilon) * logistic * (1.0 - logistic)
        return {
            "gain": -slope * centred,
            "threshold": slope * self.gain,
            "offsets": slope * self.gain,
        }

    def parameters(self) -> Dict[str, np.ndarray]:
        params = {"gain": np.array([self.gain]), "threshold": np.array([self.threshold])}
        if self.offsets is not None:
            params["offsets"] = self.offsets.copy()
        return params

    def with_parameters(self, params: Dict[str, np.ndarray]) -> 'LocalResponseMaskProvider':
        offsets = params.get("offsets", self.offsets)
        return LocalResponseMaskProvider(
            gain=float(np.asarray(params.get("gain", self.gain)).reshape(-1)[0]),
            threshold=float(np.asarray(params.get("threshold", self.threshold)).reshape(-1)[0]),
            smoothing_width=self.smoothing_width,
            offsets=None if offsets is None else np.asarray(offsets, dtype=float).copy(),
        )


def make_mask(provider: MaskProvider, x_est: np.ndarray, bank: FilterBank,
              epsilon: float = defaults.MASK_EPSILON) -> SpatialMask:
    return provider.make(x_est, bank, epsilon)


class MaskProviderFactory:
    _logger = logging.getLogger(__name__)

    @staticmethod
    def create_provider(kind: str, config: Dict[str, Any]) -> MaskProvider:
        if not kind:
            MaskProviderFactory._logger.error("mask.kind is missing or empty")
            raise ValueError("mask.kind is required and cannot be empty")

        mask_kind = MaskKind.from_value(kind)

        if mask_kind == MaskKind.CONSTANT:
            return ConstantMaskProvider()

        elif mask_kind == MaskKind.FILE:
            path = config.get("path")
            if not path:
                MaskProviderFactory._logger.error("mask.path is missing in config")
                raise ValueError("mask.path is required for file masks")
            MaskProviderFactory._logger.info(f"Creating file mask provider from {path}")
            return FileMaskProvider(path)

        MaskProviderFactory._logger.info("Creating local-response mask provider")
        offsets = config.get("offsets")
        return LocalResponseMaskProvider(gain=float(config.get("gain", 10.0)),
                                         threshold=float(config.get("threshold", 0.1)),
                                         smoothing_width=int(config.get("smoothing_width", 3)),
                                         offsets=None if offsets is None else np.asarray(offsets, dtype=float))
