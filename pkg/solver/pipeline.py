import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from cnst import defaults
from fidelity.fidelity import Fidelity
from fidelity.scaled_quadratic import ScaledQuadraticFidelity
from operators.identity import IdentityOperator
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import MaskProvider, SpatialMask, make_mask
from solver.agd import SolverResult, agd_minimize
from solver.problem import ReconstructionProblem

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class AdaptiveReconstruction:
    x_est: np.ndarray
    x_hat: np.ndarray
    mask: SpatialMask
    stage1: SolverResult
    stage2: SolverResult


def denoising_problem(regularizer: AdaptiveRegularizer, y: np.ndarray, lam: float = 1.0,
                      init: Optional[np.ndarray] = None) -> ReconstructionProblem:
    y = np.asarray(y, dtype=float)
    return ReconstructionProblem(y=y, operator=IdentityOperator(y.shape), fidelity=ScaledQuadraticFidelity(1.0),
                                 regularizer=regularizer, lam=lam, init=y.copy() if init is None else init)


def prox_denoise(regularizer: AdaptiveRegularizer, y: np.ndarray, sigma: float, lam: float = 1.0,
                 tol: float = defaults.SOLVER_TOL, max_iters: int = defaults.SOLVER_MAX_ITERS,
                 mask: Optional[SpatialMask] = None) -> SolverResult:
    """argmin_x 1/2 ||x - y||^2 + lam R_sigma(x), with mask 1 unless one is given."""
    model = regularizer.with_sigma(sigma).with_mask(mask)
    return agd_minimize(denoising_problem(model, y, lam), tol=tol, max_iters=max_iters)


def initial_guess(y: np.ndarray, operator_h: LinearOperator) -> np.ndarray:
    if operator_h.is_identity:
        return np.asarray(y, dtype=float).copy()
    return operator_h.adjoint(y)


def reconstruct_adaptive(y: np.ndarray, operator_h: LinearOperator, fidelity: Fidelity,
                         regularizer: AdaptiveRegularizer, lam: float, sigma: float, provider: MaskProvider,
                         tol: float = defaults.SOLVER_TOL, max_iters: int = defaults.SOLVER_MAX_ITERS,
                         epsilon: float = defaults.MASK_EPSILON) -> AdaptiveReconstruction:
    """Solve with mask 1, derive the mask from that estimate, then re-solve from the estimate."""
    base = regularizer.with_sigma(sigma).with_mask(None)
    stage1 = agd_minimize(ReconstructionProblem(y=y, operator=operator_h, fidelity=fidelity, regularizer=base,
                                                lam=lam, init=initial_guess(y, operator_h)),
                          tol=tol, max_iters=max_iters)
    x_est = stage1.x_hat
    mask = make_mask(provider, x_est, base.bank, epsilon)
    logger.info(f"Stage 1 done in {stage1.iterations} iterations; mask mean {mask.weights.mean():.4f}")
    stage2 = solve_stage_two(y, operator_h, fidelity, base.with_mask(mask), lam, x_est, tol, max_iters)
    return AdaptiveReconstruction(x_est=x_est, x_hat=stage2.x_hat, mask=mask, stage1=stage1, stage2=stage2)


def solve_stage_two(y: np.ndarray, operator_h: LinearOperator, fidelity: Fidelity, masked: AdaptiveRegularizer,
                    lam: float, x_est: np.ndarray, tol: float = defaults.SOLVER_TOL,
                    max_iters: int = defaults.SOLVER_MAX_ITERS) -> SolverResult:
    problem = ReconstructionProblem(y=y, operator=operator_h, fidelity=fidelity, regularizer=masked,
                                    lam=lam, init=x_est)
    return agd_minimize(problem, tol=tol, max_iters=max_iters)
