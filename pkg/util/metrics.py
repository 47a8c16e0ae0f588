import numpy as np
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

SSIM_STD = 1.5


def _pair(x: np.ndarray, ref: np.ndarray):
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if x.shape != ref.shape:
        raise ValueError(f"Images differ in shape: {x.shape} vs {ref.shape}")
    return x, ref


def psnr(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    x, ref = _pair(x, ref)
    if np.array_equal(x, ref):
        return float("inf")
    return float(peak_signal_noise_ratio(ref, x, data_range=peak))


def ssim(x: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Mean SSIM over valid positions of an 11x11 Gaussian window (sigma 1.5); images need at least 11 pixels a side."""
    x, ref = _pair(x, ref)
    if x.ndim != 2:
        raise ValueError(f"SSIM expects 2D images, got shape {x.shape}")
    return float(structural_similarity(x, ref, data_range=peak, gaussian_weights=True, sigma=SSIM_STD,
                                       use_sample_covariance=False))
