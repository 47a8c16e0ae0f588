from typing import Optional, Tuple

import numpy as np
from scipy import sparse

from cnst import defaults
from cnst.operator_kind import OperatorKind
from operators.linear_operator import LinearOperator
from util.parallel import parallel_map

RAY_STEP = 0.5


def parallel_angles(n_angles: int) -> np.ndarray:
    return np.linspace(0.0, np.pi, n_angles, endpoint=False)


class RadonOperator(LinearOperator):
    """Parallel-beam line integrals as a sparse system matrix.

    Rays are sampled every half pixel and the image is read by bilinear
    interpolation around pixel centres placed symmetrically about the origin.
    Detector bins are spread evenly over the grid diagonal.
    """

    kind = OperatorKind.RADON

    def __init__(self, shape: Tuple[int, int], n_angles: int = 60, n_detectors: Optional[int] = None,
                 pixel_size: Optional[float] = None, angles: Optional[np.ndarray] = None):
        h, w = shape
        diagonal = float(np.hypot(h, w))
        self.angles = parallel_angles(n_angles) if angles is None else np.asarray(angles, dtype=float)
        if self.angles.size == 0:
            raise ValueError("Radon operator needs at least one angle")
        self.n_detectors = int(n_detectors) if n_detectors else int(np.ceil(diagonal))
        self.pixel_size = float(pixel_size) if pixel_size else defaults.CT_DOMAIN_WIDTH / max(h, w)
        super().__init__(shape, (self.angles.size, self.n_detectors))
        self.detector_spacing = diagonal / self.n_detectors
        self.matrix = self._assemble(diagonal)
        self.logger.debug(f"Assembled {self.shape_out} sinogram matrix with {self.matrix.nnz} entries")

    def _angle_block(self, angle_index: int, diagonal: float):
        h, w = self.shape_in
        theta = self.angles[angle_index]
        detectors = (np.arange(self.n_detectors) - (self.n_detectors - 1) / 2.0) * self.detector_spacing
        n_steps = int(np.ceil(diagonal / RAY_STEP)) + 1
        steps = (np.arange(n_steps) - (n_steps - 1) / 2.0) * RAY_STEP
        s, t = np.meshgrid(detectors, steps, indexing="ij")
        px = s * np.cos(theta) - t * np.sin(theta)
        py = s * np.sin(theta) + t * np.cos(theta)
        # continuous pixel indices; centres sit at integers
        col = px + (w - 1) / 2.0
        row = py + (h - 1) / 2.0
        c0 = np.floor(col).astype(int)
        r0 = np.floor(row).astype(int)
        fc = col - c0
        fr = row - r0
        ray = np.broadcast_to(np.arange(self.n_detectors)[:, None], s.shape) + angle_index * self.n_detectors

        rows, cols, vals = [], [], []
        for dr, dc, weight in ((0, 0, (1 - fr) * (1 - fc)), (0, 1, (1 - fr) * fc),
                               (1, 0, fr * (1 - fc)), (1, 1, fr * fc)):
            rr = r0 + dr
            cc = c0 + dc
            inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w) & (weight > 0)
            rows.append(ray[inside])
            cols.append(rr[inside] * w + cc[inside])
            vals.append(weight[inside] * RAY_STEP * self.pixel_size)
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    def _assemble(self, diagonal: float) -> sparse.csr_matrix:
        blocks = parallel_map(lambda a: self._angle_block(a, diagonal), range(self.angles.size))
        rows = np.concatenate([b[0] for b in blocks])
        cols = np.concatenate([b[1] for b in blocks])
        vals = np.concatenate([b[2] for b in blocks])
        n_rays = self.angles.size * self.n_detectors
        return sparse.coo_matrix((vals, (rows, cols)), shape=(n_rays, self.shape_in[0] * self.shape_in[1])).tocsr()

    def _apply(self, x: np.ndarray) -> np.ndarray:
        return (self.matrix @ x.ravel()).reshape(self.shape_out)

    def _adjoint(self, r: np.ndarray) -> np.ndarray:
        return (self.matrix.T @ r.ravel()).reshape(self.shape_in)


def limited_angle(radon: RadonOperator, fraction: float = defaults.LIMITED_ANGLE_FRACTION) -> RadonOperator:
    """Copy of ``radon`` without the leading and trailing ``fraction / 2`` of its angles."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"fraction must lie in [0, 1), got {fraction}")
    drop = int(round(radon.angles.size * fraction / 2.0))
    kept = radon.angles[drop:radon.angles.size - drop]
    return RadonOperator(radon.shape_in, n_detectors=radon.n_detectors, pixel_size=radon.pixel_size, angles=kept)
