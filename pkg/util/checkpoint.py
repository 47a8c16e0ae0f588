import logging
import math
import os
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from filters.filter_bank import FilterBank
from potentials.noise_scaling import NoiseScaling
from potentials.spline_potential import SplinePotential
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import LocalResponseMaskProvider

logger = logging.getLogger(__name__)

ARRAY_HEADER = "ARRF 1"


def _format_value(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.17g}"


def write_arrays(path: str, arrays: Mapping[str, np.ndarray]) -> None:
    """Text array file: header, then name / dims / values blocks."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    lines = [ARRAY_HEADER]
    for name, array in arrays.items():
        if not name or any(ch.isspace() for ch in name):
            raise ValueError(f"Array names must be non-empty without whitespace, got {name!r}")
        array = np.atleast_1d(np.asarray(array, dtype=float))
        if not np.all(np.isfinite(array)):
            raise ValueError(f"Refusing to write non-finite values for array {name}")
        lines.append(name)
        lines.append(" ".join(str(d) for d in array.shape))
        lines.append(" ".join(_format_value(v) for v in array.ravel()))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def read_arrays(path: str) -> Dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != ARRAY_HEADER:
        raise ValueError(f"{path}: missing '{ARRAY_HEADER}' header")
    arrays: Dict[str, np.ndarray] = {}
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) % 3 != 0:
        raise ValueError(f"{path}: truncated array block")
    for k in range(0, len(body), 3):
        name = body[k].strip()
        shape = tuple(int(d) for d in body[k + 1].split())
        values = np.array([float(v) for v in body[k + 2].split()], dtype=float)
        if values.size != int(np.prod(shape)):
            raise ValueError(f"{path}: array {name} declares shape {shape} but holds {values.size} values")
        arrays[name] = values.reshape(shape)
    return arrays


def save_checkpoint(path: str, model: AdaptiveRegularizer,
                    provider: Optional[LocalResponseMaskProvider] = None) -> None:
    potential = model.potential
    arrays: Dict[str, np.ndarray] = {
        "psi_plus": potential.second_derivs_plus,
        "psi_minus": potential.second_derivs_minus,
        "mu": np.array([potential.mu]),
        "c_cvx": np.array([potential.c_cvx]),
        "spacing": np.array([potential.spacing]),
        "knot_count": np.array([potential.knot_count]),
    }
    for c in range(model.n_channels):
        arrays[f"alpha_knots_{c}"] = model.noise_scalings[c].values
        arrays[f"kernel_{c}"] = model.bank.kernels[c]
    if provider is not None:
        arrays["mask_gain"] = np.array([provider.gain])
        arrays["mask_threshold"] = np.array([provider.threshold])
        arrays["mask_smoothing_width"] = np.array([provider.smoothing_width])
        if provider.offsets is not None:
            arrays["mask_offsets"] = provider.offsets
    write_arrays(path, arrays)
    logger.info(f"Saved {model.n_channels}-channel checkpoint to {path}")


def _scalar(arrays: Dict[str, np.ndarray], name: str, path: str) -> float:
    if name not in arrays:
        raise ValueError(f"{path}: checkpoint lacks array {name}")
    return float(arrays[name].reshape(-1)[0])


def load_checkpoint(path: str, sigma: float = 25.0 / 255.0) -> Tuple[AdaptiveRegularizer,
                                                                     Optional[LocalResponseMaskProvider]]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    arrays = read_arrays(path)
    n_channels = sum(1 for name in arrays if name.startswith("kernel_"))
    if n_channels == 0:
        raise ValueError(f"{path}: checkpoint holds no kernels")
    for name in ("psi_plus", "psi_minus"):
        if name not in arrays:
            raise ValueError(f"{path}: checkpoint lacks array {name}")
    potential = SplinePotential(second_derivs_plus=arrays["psi_plus"].reshape(-1),
                                second_derivs_minus=arrays["psi_minus"].reshape(-1),
                                mu=_scalar(arrays, "mu", path), c_cvx=int(_scalar(arrays, "c_cvx", path)),
                                knot_count=int(_scalar(arrays, "knot_count", path)),
                                spacing=_scalar(arrays, "spacing", path))
    bank = FilterBank(np.stack([arrays[f"kernel_{c}"] for c in range(n_channels)]))
    scalings = [NoiseScaling(values=arrays[f"alpha_knots_{c}"].reshape(-1)) for c in range(n_channels)]
    model = AdaptiveRegularizer(bank, potential, scalings, sigma)

    provider = None
    if "mask_gain" in arrays:
        offsets = arrays.get("mask_offsets")
        provider = LocalResponseMaskProvider(gain=_scalar(arrays, "mask_gain", path),
                                             threshold=_scalar(arrays, "mask_threshold", path),
                                             smoothing_width=int(_scalar(arrays, "mask_smoothing_width", path)),
                                             offsets=None if offsets is None else offsets.reshape(-1))
    logger.info(f"Loaded {n_channels}-channel checkpoint from {path}")
    return model, provider
