import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.fft import idctn
from scipy.signal import convolve2d, correlate2d

from cnst import defaults
from util.parallel import parallel_map
from util.power_iteration import power_iteration

DENSE_GRID_LIMIT = 16 * 16
DEFAULT_NORM_GRID = (32, 32)


def correlate_same(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded correlation, output the size of ``image``; the kernel anchor is ((kh-1)//2, (kw-1)//2)."""
    kh, kw = kernel.shape
    h, w = image.shape
    top = kh - 1 - (kh - 1) // 2
    left = kw - 1 - (kw - 1) // 2
    full = correlate2d(image, kernel, mode="full")
    return full[top:top + h, left:left + w]


def correlate_same_adjoint(response: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    kh, kw = kernel.shape
    h, w = response.shape
    top = (kh - 1) // 2
    left = (kw - 1) // 2
    full = convolve2d(response, kernel, mode="full")
    return full[top:top + h, left:left + w]


def dirac_kernel(size: int) -> np.ndarray:
    kernel = np.zeros((size, size))
    kernel[size // 2, size // 2] = 1.0
    return kernel


def dct_kernels(n_channels: int, kernel_size: int) -> np.ndarray:
    """The first ``n_channels`` non-constant 2D DCT-II atoms, ordered by total frequency."""
    available = kernel_size * kernel_size - 1
    if n_channels > available:
        raise ValueError(f"At most {available} non-constant atoms exist for kernel_size={kernel_size}")
    freqs = sorted(((u, v) for u in range(kernel_size) for v in range(kernel_size) if (u, v) != (0, 0)),
                   key=lambda uv: (uv[0] + uv[1], uv[0]))
    kernels = np.zeros((n_channels, kernel_size, kernel_size))
    for c, (u, v) in enumerate(freqs[:n_channels]):
        coeffs = np.zeros((kernel_size, kernel_size))
        coeffs[u, v] = 1.0
        kernels[c] = idctn(coeffs, norm="ortho")
    return kernels


class FilterBank:
    """N_C single-layer convolution channels with zero boundary handling."""

    def __init__(self, kernels: np.ndarray, zero_channels: Sequence[int] = ()):
        self.logger = logging.getLogger(__name__)
        kernels = np.asarray(kernels, dtype=float)
        if kernels.ndim == 2:
            kernels = kernels[None]
        if kernels.ndim != 3 or kernels.shape[0] < 1:
            raise ValueError(f"Kernels must have shape (channels, kh, kw), got {kernels.shape}")
        if not np.all(np.isfinite(kernels)):
            raise ValueError("Kernels must be finite")
        self.kernels = kernels.copy()
        self.kernels.setflags(write=False)
        self.zero_channels = tuple(zero_channels)
        self._norm_cache: Dict[Tuple[int, int], np.ndarray] = {}

    @classmethod
    def dct(cls, n_channels: int = 8, kernel_size: int = 5) -> 'FilterBank':
        return cls(dct_kernels(n_channels, kernel_size))

    @property
    def n_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.kernels.shape[1]

    def apply(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=float)
        if image.ndim != 2:
            raise ValueError(f"Filter bank expects a 2D image, got shape {image.shape}")
        return np.stack([correlate_same(image, k) for k in self.kernels])

    def apply_adjoint(self, responses: np.ndarray) -> np.ndarray:
        responses = np.asarray(responses, dtype=float)
        if responses.ndim != 3 or responses.shape[0] != self.n_channels:
            raise ValueError(f"Expected responses of shape ({self.n_channels}, h, w), got {responses.shape}")
        out = np.zeros(responses.shape[1:])
        for c in range(self.n_channels):
            out += correlate_same_adjoint(responses[c], self.kernels[c])
        return out

    def channel_norm(self, c: int, grid_shape: Tuple[int, int], tol: float = defaults.POWER_TOL,
                     max_iters: int = defaults.POWER_MAX_ITERS) -> float:
        kernel = self.kernels[c]
        return power_iteration(lambda x: correlate_same(x, kernel),
                               lambda r: correlate_same_adjoint(r, kernel),
                               tuple(grid_shape), tol=tol, max_iters=max_iters)

    def channel_norms(self, grid_shape: Tuple[int, int]) -> np.ndarray:
        key = (int(grid_shape[0]), int(grid_shape[1]))
        if key not in self._norm_cache:
            norms = parallel_map(lambda c: self.channel_norm(c, key), range(self.n_channels))
            self._norm_cache[key] = np.asarray(norms)
        return self._norm_cache[key]

    def normalize_spectral(self, grid_shape: Tuple[int, int] = DEFAULT_NORM_GRID, tol: float = defaults.POWER_TOL,
                           max_iters: int = defaults.POWER_MAX_ITERS) -> 'FilterBank':
        """Rescale every channel to unit operator norm on ``grid_shape``; all-zero channels are kept and flagged."""
        norms = parallel_map(lambda c: self.channel_norm(c, grid_shape, tol, max_iters), range(self.n_channels))
        kernels = self.kernels.copy()
        flagged: List[int] = []
        for c, norm in enumerate(norms):
            if norm == 0.0 or not np.any(kernels[c]):
                self.logger.warning(f"Channel {c} has an all-zero kernel; left unnormalized")
                flagged.append(c)
                continue
            kernels[c] = kernels[c] / norm
        self.logger.debug(f"Normalized {self.n_channels - len(flagged)} channels on grid {tuple(grid_shape)}")
        return FilterBank(kernels, zero_channels=flagged)

    def channel_matrix(self, c: int, grid_shape: Tuple[int, int]) -> np.ndarray:
        """Dense matrix of channel ``c`` acting on row-major flattened images."""
        n = grid_shape[0] * grid_shape[1]
        columns = np.zeros((n, n))
        for i in range(n):
            unit = np.zeros(n)
            unit[i] = 1.0
            columns[:, i] = correlate_same(unit.reshape(grid_shape), self.kernels[c]).ravel()
        return columns

    def scaled(self, factor: float) -> 'FilterBank':
        return FilterBank(self.kernels * factor)


def kernel_intersection_lower_bound(bank: FilterBank, operator_h=None,
                                    grid: Tuple[int, int] = (8, 8)) -> float:
    """Smallest singular value of [W_1; ...; W_C; H] assembled densely on ``grid``.

    Positive exactly when ker(W) and ker(H) intersect trivially.
    """
    n = grid[0] * grid[1]
    if n > DENSE_GRID_LIMIT:
        raise ValueError(f"Grid {grid} too large for the dense diagnostic (limit {DENSE_GRID_LIMIT} pixels)")
    blocks = [bank.channel_matrix(c, grid) for c in range(bank.n_channels)]
    if operator_h is not None:
        blocks.append(operator_matrix(operator_h, grid))
    stacked = np.vstack(blocks)
    return float(np.linalg.svd(stacked, compute_uv=False).min())


def operator_matrix(operator_h, grid: Optional[Tuple[int, int]] = None) -> np.ndarray:
    grid = tuple(operator_h.shape_in) if grid is None else tuple(grid)
    n = grid[0] * grid[1]
    columns = []
    for i in range(n):
        unit = np.zeros(n)
        unit[i] = 1.0
        columns.append(np.asarray(operator_h.apply(unit.reshape(grid))).ravel())
    return np.stack(columns, axis=1)
