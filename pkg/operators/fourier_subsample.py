from typing import Tuple

import numpy as np
from scipy.fft import fft2, fftfreq, ifft2

from cnst import defaults
from cnst.operator_kind import OperatorKind
from operators.linear_operator import LinearOperator


def select_columns(width: int, acceleration: int, center_fraction: float, seed: int) -> np.ndarray:
    """Kept k-space columns: the lowest-frequency band plus equispaced columns with a seeded offset."""
    n_keep = int(round(width / acceleration))
    if n_keep <= 0:
        return np.zeros(0, dtype=int)
    by_frequency = np.argsort(np.abs(fftfreq(width)), kind="stable")
    n_center = min(n_keep, max(1, int(round(width * center_fraction))))
    center = by_frequency[:n_center]
    rest = np.sort(by_frequency[n_center:])
    n_rest = min(n_keep - n_center, rest.size)
    picked = np.zeros(0, dtype=int)
    if n_rest > 0:
        step = rest.size / n_rest
        offset = np.random.default_rng(seed).uniform(0.0, step)
        picked = rest[np.minimum((offset + step * np.arange(n_rest)).astype(int), rest.size - 1)]
    return np.sort(np.concatenate([center, picked]).astype(int))


class FourierSubsampleOperator(LinearOperator):
    """Unitary 2D DFT restricted to a subset of columns; output stacks real and imaginary parts."""

    kind = OperatorKind.FOURIER_SUBSAMPLE

    def __init__(self, shape: Tuple[int, int], acceleration: int = defaults.MRI_ACCELERATION,
                 center_fraction: float = defaults.MRI_CENTER_FRACTION, seed: int = 0):
        if acceleration < 1:
            raise ValueError(f"acceleration must be >= 1, got {acceleration}")
        columns = select_columns(shape[1], acceleration, center_fraction, seed)
        super().__init__(shape, (2, shape[0], columns.size))
        self.columns = columns
        if columns.size == 0:
            self.logger.warning(f"Frequency mask keeps no columns for width {shape[1]} at acceleration {acceleration}")

    def _apply(self, x: np.ndarray) -> np.ndarray:
        spectrum = fft2(x, norm="ortho")[:, self.columns]
        return np.stack([spectrum.real, spectrum.imag])

    def _adjoint(self, r: np.ndarray) -> np.ndarray:
        spectrum = np.zeros(self.shape_in, dtype=complex)
        spectrum[:, self.columns] = r[0] + 1j * r[1]
        return ifft2(spectrum, norm="ortho").real

    def _estimate_norm(self) -> float:
        return 1.0 if self.columns.size else 0.0
