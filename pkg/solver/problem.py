from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from fidelity.fidelity import Fidelity
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer


@dataclass(eq=False)
class ReconstructionProblem:
    """g_y(x) = D(Hx, y) + lam * R_y(x)"""

    y: np.ndarray
    operator: LinearOperator
    fidelity: Fidelity
    regularizer: AdaptiveRegularizer
    lam: float = 1.0
    init: Optional[np.ndarray] = None
    _lipschitz: Optional[float] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        self.y = np.asarray(self.y, dtype=float)
        if self.y.shape != self.operator.shape_out:
            raise ValueError(f"Data shape {self.y.shape} does not match operator output {self.operator.shape_out}")
        if self.init is None:
            self.init = np.zeros(self.operator.shape_in)
        self.init = np.asarray(self.init, dtype=float)
        if self.init.shape != self.operator.shape_in:
            raise ValueError(f"Initial image shape {self.init.shape} does not match {self.operator.shape_in}")

    @property
    def n_pixels(self) -> int:
        return int(np.prod(self.operator.shape_in))

    def objective(self, x: np.ndarray) -> float:
        return self.fidelity.value(self.operator.apply(x), self.y) + self.lam * self.regularizer.evaluate(x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        data_grad = self.operator.adjoint(self.fidelity.gradient(self.operator.apply(x), self.y))
        return data_grad + self.lam * self.regularizer.gradient(x)

    def lipschitz(self) -> float:
        """L = Lip(D) ||H||^2 + lam Lip(grad R)."""
        if self._lipschitz is None:
            data_part = self.fidelity.lipschitz() * self.operator.norm_estimate() ** 2
            reg_part = self.lam * self.regularizer.lipschitz_gradient_bound(self.operator.shape_in)
            self._lipschitz = float(data_part + reg_part)
        return self._lipschitz


def optimality_residual(problem: ReconstructionProblem, x: np.ndarray) -> float:
    return float(np.linalg.norm(problem.gradient(x)) / np.sqrt(problem.n_pixels))
