from typing import Tuple

import numpy as np

from cnst.operator_kind import OperatorKind
from operators.linear_operator import LinearOperator


class IdentityOperator(LinearOperator):
    kind = OperatorKind.IDENTITY

    def __init__(self, shape: Tuple[int, int]):
        super().__init__(shape, shape)

    def _apply(self, x: np.ndarray) -> np.ndarray:
        return x.copy()

    def _adjoint(self, r: np.ndarray) -> np.ndarray:
        return r.copy()

    def _estimate_norm(self) -> float:
        return 1.0
