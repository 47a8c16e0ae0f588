import logging
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from cnst import defaults
from cnst.fidelity_kind import NoiseKind
from operators.linear_operator import LinearOperator

logger = logging.getLogger(__name__)


@dataclass
class NoiseSpec:
    kind: NoiseKind = NoiseKind.GAUSSIAN
    sigma: float = 0.0
    n0: float = defaults.CT_PHOTON_COUNT
    mu_ct: float = defaults.CT_ATTENUATION

    def __post_init__(self):
        if self.kind == NoiseKind.GAUSSIAN and not self.sigma >= 0:
            raise ValueError(f"Gaussian noise needs sigma >= 0, got {self.sigma}")
        if self.kind == NoiseKind.CT_POISSON and not (self.n0 > 0 and self.mu_ct > 0):
            raise ValueError("Poisson noise needs positive N0 and mu_ct")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NoiseSpec':
        return cls(
            kind=NoiseKind.from_value(data.get("noise", NoiseKind.GAUSSIAN.value)),
            sigma=float(data.get("noise_sigma", 0.0)),
            n0=float(data.get("n0", defaults.CT_PHOTON_COUNT)),
            mu_ct=float(data.get("mu_ct", defaults.CT_ATTENUATION)),
        )


def simulate_data(operator_h: LinearOperator, x_true: np.ndarray, noise: NoiseSpec, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    clean = operator_h.apply(x_true)
    if noise.kind == NoiseKind.GAUSSIAN:
        if noise.sigma == 0.0:
            return clean
        return clean + noise.sigma * rng.standard_normal(clean.shape)

    counts = rng.poisson(noise.n0 * np.exp(-noise.mu_ct * clean)).astype(float)
    zero_bins = int(np.sum(counts < 1))
    if zero_bins:
        logger.info(f"Clamped {zero_bins} zero-count detector bins to one count")
    counts = np.maximum(counts, 1.0)
    return -np.log(counts / noise.n0) / noise.mu_ct
