import logging
from abc import ABC, abstractmethod
from typing import Optional, Tuple

import numpy as np

from cnst import defaults
from cnst.operator_kind import OperatorKind
from util.power_iteration import power_iteration


class LinearOperator(ABC):
    kind: OperatorKind

    def __init__(self, shape_in: Tuple[int, ...], shape_out: Tuple[int, ...]):
        self.logger = logging.getLogger(__name__)
        self.shape_in = tuple(int(s) for s in shape_in)
        self.shape_out = tuple(int(s) for s in shape_out)
        self._norm: Optional[float] = None

    @abstractmethod
    def _apply(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _adjoint(self, r: np.ndarray) -> np.ndarray:
        pass

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.shape_in:
            raise ValueError(f"{self.kind} operator expects input shape {self.shape_in}, got {x.shape}")
        return self._apply(x)

    def adjoint(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if r.shape != self.shape_out:
            raise ValueError(f"{self.kind} adjoint expects input shape {self.shape_out}, got {r.shape}")
        return self._adjoint(r)

    def normal(self, x: np.ndarray) -> np.ndarray:
        return self.adjoint(self.apply(x))

    def _estimate_norm(self) -> float:
        return defaults.NORM_MARGIN * power_iteration(self.apply, self.adjoint, self.shape_in)

    def norm_estimate(self) -> float:
        """Upper estimate of the operator 2-norm, computed once."""
        if self._norm is None:
            self._norm = float(self._estimate_norm())
            self.logger.debug(f"{self.kind} operator norm estimate {self._norm:.6g}")
        return self._norm

    @property
    def is_identity(self) -> bool:
        return self.kind == OperatorKind.IDENTITY


def op_apply(operator_h: LinearOperator, x: np.ndarray) -> np.ndarray:
    return operator_h.apply(x)


def op_adjoint(operator_h: LinearOperator, r: np.ndarray) -> np.ndarray:
    return operator_h.adjoint(r)
