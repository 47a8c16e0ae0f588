import numpy as np

from cnst.fidelity_kind import FidelityKind
from fidelity.fidelity import Fidelity


class ScaledQuadraticFidelity(Fidelity):
    """(1 / 2 sigma^2) ||Hx - y||^2"""

    kind = FidelityKind.SCALED_QUADRATIC

    def __init__(self, sigma: float = 1.0):
        if not sigma > 0:
            raise ValueError(f"Quadratic fidelity needs sigma > 0, got {sigma}")
        self.sigma = float(sigma)

    def value(self, hx: np.ndarray, y: np.ndarray) -> float:
        hx, y = self._check(hx, y)
        return float(0.5 * np.sum((hx - y) ** 2) / self.sigma ** 2)

    def gradient(self, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
        hx, y = self._check(hx, y)
        return (hx - y) / self.sigma ** 2

    def hessian_diag(self, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
        hx, y = self._check(hx, y)
        return np.full(hx.shape, 1.0 / self.sigma ** 2)

    def lipschitz(self) -> float:
        return 1.0 / self.sigma ** 2
