import logging
from dataclasses import dataclass
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np

from cnst import defaults
from fidelity.fidelity import Fidelity
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import LocalResponseMaskProvider, make_mask
from solver.agd import agd_minimize
from solver.pipeline import initial_guess, solve_stage_two
from solver.problem import ReconstructionProblem
from util.metrics import psnr
from util.parallel import parallel_map

logger = logging.getLogger(__name__)

REFINEMENT_FACTORS = (2.0, 1.25, 1.1)


@dataclass
class SearchResult:
    lam: float
    sigma: float
    psnr: float


def _clamp_sigma(sigma: float) -> float:
    return float(min(max(sigma, 1e-6), defaults.SIGMA_MAX))


def hyperparameter_search(y: np.ndarray, x_ref: np.ndarray, operator_h: LinearOperator, fidelity: Fidelity,
                          regularizer: AdaptiveRegularizer, lam0: float, sigma0: float, levels: int = 3,
                          tol: float = defaults.SOLVER_TOL,
                          max_iters: int = defaults.SOLVER_MAX_ITERS) -> SearchResult:
    """Coarse-to-fine search of (lam, sigma) maximizing PSNR against ``x_ref``.

    Each level scores the 3x3 grid {v/f, v, v*f} around the incumbent, with f
    taken from 2, 1.25 and 1.1 in turn.
    """
    if not 1 <= levels <= len(REFINEMENT_FACTORS):
        raise ValueError(f"levels must lie in [1, {len(REFINEMENT_FACTORS)}], got {levels}")
    init = initial_guess(y, operator_h)

    def score(params: Tuple[float, float]) -> float:
        lam, sigma = params
        problem = ReconstructionProblem(y=y, operator=operator_h, fidelity=fidelity,
                                        regularizer=regularizer.with_sigma(sigma), lam=lam, init=init)
        return psnr(agd_minimize(problem, tol=tol, max_iters=max_iters).x_hat, x_ref)

    best = SearchResult(lam=float(lam0), sigma=_clamp_sigma(sigma0), psnr=-np.inf)
    for factor in REFINEMENT_FACTORS[:levels]:
        grid: List[Tuple[float, float]] = [
            (best.lam * a, _clamp_sigma(best.sigma * b))
            for a, b in product((1.0 / factor, 1.0, factor), repeat=2)
        ]
        scores = parallel_map(score, grid)
        winner = int(np.argmax(scores))
        if scores[winner] > best.psnr:
            best = SearchResult(lam=grid[winner][0], sigma=grid[winner][1], psnr=float(scores[winner]))
        logger.info(f"Grid level f={factor}: lam={best.lam:.5g} sigma={best.sigma:.5g} psnr={best.psnr:.3f}")
    return best


def provider_grid_search(y: np.ndarray, x_ref: np.ndarray, operator_h: LinearOperator, fidelity: Fidelity,
                         regularizer: AdaptiveRegularizer, lam: float, sigma: float, x_est: np.ndarray,
                         gains: Sequence[float], thresholds: Sequence[float], smoothing_width: int = 3,
                         epsilon: float = defaults.MASK_EPSILON, tol: float = defaults.SOLVER_TOL,
                         max_iters: int = defaults.SOLVER_MAX_ITERS) -> Tuple[LocalResponseMaskProvider, float]:
    """Best local-response provider for the second stage, scored by PSNR."""
    base = regularizer.with_sigma(sigma).with_mask(None)
    candidates = [LocalResponseMaskProvider(gain=g, threshold=t, smoothing_width=smoothing_width)
                  for g, t in product(gains, thresholds)]

    def score(provider: LocalResponseMaskProvider) -> float:
        mask = make_mask(provider, x_est, base.bank, epsilon)
        stage2 = solve_stage_two(y, operator_h, fidelity, base.with_mask(mask), lam, x_est, tol, max_iters)
        return psnr(stage2.x_hat, x_ref)

    scores = parallel_map(score, candidates)
    winner = int(np.argmax(scores))
    logger.info(f"Best provider gain={candidates[winner].gain} threshold={candidates[winner].threshold} "
                f"psnr={scores[winner]:.3f}")
    return candidates[winner], float(scores[winner])
