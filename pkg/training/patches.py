import logging
import os
from typing import List, Sequence

import numpy as np

from util.grid_io import read_image

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".grf", ".pgm")


def load_images(data_dir: str) -> List[np.ndarray]:
    """Every single-channel grid or PGM image in ``data_dir``, in file-name order."""
    if not os.path.isdir(data_dir):
        raise FileNotFoundError(f"Image directory not found: {data_dir}")
    names = sorted(n for n in os.listdir(data_dir) if n.lower().endswith(IMAGE_SUFFIXES))
    images = []
    for name in names:
        image = read_image(os.path.join(data_dir, name))
        if image.ndim != 2:
            logger.warning(f"Skipping multi-channel image {name}")
            continue
        images.append(image)
    logger.info(f"Loaded {len(images)} images from {data_dir}")
    return images


def extract_patches(images: Sequence[np.ndarray], patch_size: int, n_patches: int, seed: int = 0) -> np.ndarray:
    usable = [img for img in images if min(img.shape) >= patch_size]
    if not usable:
        raise ValueError(f"No image is large enough for {patch_size}x{patch_size} patches")
    rng = np.random.default_rng(seed)
    patches = np.empty((n_patches, patch_size, patch_size))
    for k in range(n_patches):
        img = usable[rng.integers(len(usable))]
        top = rng.integers(img.shape[0] - patch_size + 1)
        left = rng.integers(img.shape[1] - patch_size + 1)
        patches[k] = img[top:top + patch_size, left:left + patch_size]
    return patches
