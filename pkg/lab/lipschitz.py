import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from fidelity.scaled_quadratic import ScaledQuadraticFidelity
from filters.filter_bank import operator_matrix
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import SpatialMask
from solver.agd import agd_minimize
from solver.problem import ReconstructionProblem
from util.parallel import parallel_map

logger = logging.getLogger(__name__)

PROBE_TOL = 1e-9
PROBE_MAX_ITERS = 20000
MASK_BOUND_SLACK = 1.05


@dataclass(eq=False)
class SolutionMapProbe:
    """Template for perturbation probes: quadratic data term with unit sigma, explicit lambda."""

    regularizer: AdaptiveRegularizer
    operator: LinearOperator
    y: np.ndarray
    lam: float = 1.0
    tol: float = PROBE_TOL
    max_iters: int = PROBE_MAX_ITERS

    def solve(self, y: np.ndarray, mask: Optional[SpatialMask] = None, init: Optional[np.ndarray] = None) -> np.ndarray:
        regularizer = self.regularizer if mask is None else self.regularizer.with_mask(mask)
        problem = ReconstructionProblem(y=y, operator=self.operator, fidelity=ScaledQuadraticFidelity(1.0),
                                        regularizer=regularizer, lam=self.lam,
                                        init=self.operator.adjoint(y) if init is None else init)
        return agd_minimize(problem, tol=self.tol, max_iters=self.max_iters).x_hat


def inverse_norm(operator_h: LinearOperator) -> float:
    """||H^{-1}|| from the dense matrix; H must be square and invertible."""
    if operator_h.is_identity:
        return 1.0
    matrix = operator_matrix(operator_h)
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"Operator {operator_h.kind} is not square and has no inverse")
    smallest = float(np.linalg.svd(matrix, compute_uv=False).min())
    if smallest <= 1e-12:
        raise ValueError(f"Operator {operator_h.kind} is numerically singular")
    return 1.0 / smallest


def _require_convex(regularizer: AdaptiveRegularizer) -> None:
    if regularizer.potential.c_cvx != 0:
        raise ValueError("Solution-map certificates need a convex model (c_cvx = 0)")


def empirical_solution_map_lipschitz(probe: SolutionMapProbe, n_pairs: int = 50, radius: float = 0.05,
                                     seed: int = 0) -> Tuple[float, float]:
    """(max ||x1 - x2|| / ||y1 - y2|| over random data pairs, ||H^{-1}||)."""
    _require_convex(probe.regularizer)
    bound = inverse_norm(probe.operator)
    rng = np.random.default_rng(seed)
    pairs = [(probe.y + radius * rng.standard_normal(probe.y.shape),
              probe.y + radius * rng.standard_normal(probe.y.shape)) for _ in range(n_pairs)]

    def ratio(pair) -> float:
        y1, y2 = pair
        return float(np.linalg.norm(probe.solve(y1) - probe.solve(y2)) / np.linalg.norm(y1 - y2))

    ratios: List[float] = parallel_map(ratio, pairs)
    max_ratio = float(max(ratios))
    logger.info(f"Solution-map probe: max ratio {max_ratio:.6f}, bound {bound:.6f}")
    if max_ratio > bound * (1.0 + 1e-3):
        logger.warning(f"Observed ratio {max_ratio:.6f} exceeds the bound {bound:.6f}")
    return max_ratio, bound


def mask_sensitivity_bound(probe: SolutionMapProbe) -> float:
    """lam ||H^{-1}||^2 (sum_c sup|psi_c'|^2 ||W_c||^2)^{1/2}"""
    norms = probe.regularizer.bank.channel_norms(probe.operator.shape_in)
    first = probe.regularizer.max_first_derivs()
    return probe.lam * inverse_norm(probe.operator) ** 2 * float(np.sqrt(np.sum(first ** 2 * norms ** 2)))


def empirical_mask_sensitivity(probe: SolutionMapProbe, n_pairs: int = 50, radius: float = 0.05, seed: int = 0,
                               base_mask: Optional[SpatialMask] = None) -> Tuple[float, float]:
    """(max ||x1 - x2|| / ||Lambda1 - Lambda2|| at fixed data, slack-adjusted bound)."""
    _require_convex(probe.regularizer)
    regularizer = probe.regularizer
    shape = probe.operator.shape_in
    if base_mask is None:
        base_mask = SpatialMask(weights=np.full((regularizer.n_channels,) + tuple(shape), 0.5))
    epsilon = base_mask.epsilon
    rng = np.random.default_rng(seed)

    def perturbed() -> SpatialMask:
        weights = np.clip(base_mask.weights + radius * rng.standard_normal(base_mask.weights.shape), epsilon, 1.0)
        return SpatialMask(weights=weights, epsilon=epsilon)

    pairs = [(perturbed(), perturbed()) for _ in range(n_pairs)]

    def ratio(pair) -> float:
        m1, m2 = pair
        gap = float(np.linalg.norm(m1.weights - m2.weights))
        if gap == 0.0:
            return 0.0
        return float(np.linalg.norm(probe.solve(probe.y, m1) - probe.solve(probe.y, m2)) / gap)

    max_ratio = float(max(parallel_map(ratio, pairs)))
    bound = mask_sensitivity_bound(probe) * MASK_BOUND_SLACK
    logger.info(f"Mask sensitivity probe: max ratio {max_ratio:.6g}, bound {bound:.6g}")
    return max_ratio, bound
