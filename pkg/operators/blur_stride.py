from typing import Tuple

import numpy as np

from cnst import defaults
from cnst.operator_kind import OperatorKind
from filters.filter_bank import correlate_same, correlate_same_adjoint
from operators.linear_operator import LinearOperator


def gaussian_kernel(size: int, std: float) -> np.ndarray:
    coords = np.arange(size) - (size - 1) / 2.0
    profile = np.exp(-coords ** 2 / (2.0 * std ** 2))
    kernel = np.outer(profile, profile)
    return kernel / kernel.sum()


class BlurStrideOperator(LinearOperator):
    """Gaussian blur followed by keeping every ``stride``-th row and column."""

    kind = OperatorKind.BLUR_STRIDE

    def __init__(self, shape: Tuple[int, int], kernel_size: int = defaults.BLUR_KERNEL_SIZE,
                 std: float = defaults.BLUR_STD, stride: int = defaults.BLUR_STRIDE):
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        if std <= 0 or kernel_size < 1:
            raise ValueError("Blur kernel needs a positive size and standard deviation")
        h, w = shape
        super().__init__(shape, (-(-h // stride), -(-w // stride)))
        self.kernel = gaussian_kernel(kernel_size, std)
        self.stride = stride

    def _apply(self, x: np.ndarray) -> np.ndarray:
        return correlate_same(x, self.kernel)[::self.stride, ::self.stride]

    def _adjoint(self, r: np.ndarray) -> np.ndarray:
        upsampled = np.zeros(self.shape_in)
        upsampled[::self.stride, ::self.stride] = r
        return correlate_same_adjoint(upsampled, self.kernel)
