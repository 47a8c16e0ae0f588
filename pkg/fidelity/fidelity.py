from abc import ABC, abstractmethod

import numpy as np

from cnst.fidelity_kind import FidelityKind


class Fidelity(ABC):
    """Data term D(Hx, y), written as a function of the forward projection Hx."""

    kind: FidelityKind

    @abstractmethod
    def value(self, hx: np.ndarray, y: np.ndarray) -> float:
        pass

    @abstractmethod
    def gradient(self, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def hessian_diag(self, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def lipschitz(self) -> float:
        """Global Lipschitz constant of the gradient with respect to Hx."""
        pass

    @staticmethod
    def _check(hx: np.ndarray, y: np.ndarray):
        hx = np.asarray(hx, dtype=float)
        y = np.asarray(y, dtype=float)
        if hx.shape != y.shape:
            raise ValueError(f"Fidelity arguments differ in shape: {hx.shape} vs {y.shape}")
        if not (np.all(np.isfinite(hx)) and np.all(np.isfinite(y))):
            raise ValueError("Fidelity arguments must be finite")
        return hx, y


def fidelity_value(fidelity: Fidelity, hx: np.ndarray, y: np.ndarray) -> float:
    return fidelity.value(hx, y)


def fidelity_gradient_wrt_hx(fidelity: Fidelity, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
    return fidelity.gradient(hx, y)


def fidelity_hessian_diag(fidelity: Fidelity, hx: np.ndarray, y: np.ndarray) -> np.ndarray:
    return fidelity.hessian_diag(hx, y)
