import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from filters.filter_bank import FilterBank
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from util.parallel import parallel_map

logger = logging.getLogger(__name__)

EXACT_MAX_VARIABLES = 12
DENSE_MAX_VARIABLES = 64
SEARCH_STARTS = 200
SEARCH_ITERS = 400
TAIL_GRID_POINTS = 20001


@dataclass(frozen=True)
class CoercivityResult:
    gamma: float
    exact: bool


@dataclass
class PriorCheck:
    normalizable: bool
    log_bound: float
    a: float
    b: float
    witness: Dict[str, Any] = field(default_factory=dict)


def _orthant_minimum(matrices: np.ndarray, signs: np.ndarray) -> float:
    """min t s.t. sum_i e_ci <= t, -e_c <= W_c x <= e_c, signs * x >= 0, <signs, x> = 1."""
    n_channels, n, _ = matrices.shape
    n_e = n_channels * n
    n_vars = n + n_e + 1
    cost = np.zeros(n_vars)
    cost[-1] = 1.0
    rows = []
    rhs = []
    for c in range(n_channels):
        e_block = np.zeros((n, n_e))
        e_block[:, c * n:(c + 1) * n] = np.eye(n)
        zeros_t = np.zeros((n, 1))
        rows.append(np.hstack([matrices[c], -e_block, zeros_t]))
        rows.append(np.hstack([-matrices[c], -e_block, zeros_t]))
        rhs.extend([np.zeros(n), np.zeros(n)])
        total = np.zeros((1, n_vars))
        total[0, n + c * n:n + (c + 1) * n] = 1.0
        total[0, -1] = -1.0
        rows.append(total)
        rhs.append(np.zeros(1))
    rows.append(np.hstack([-np.diag(signs), np.zeros((n, n_e + 1))]))
    rhs.append(np.zeros(n))
    a_eq = np.concatenate([signs, np.zeros(n_e + 1)])[None]
    bounds = [(None, None)] * n + [(0, None)] * (n_e + 1)
    result = linprog(cost, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs), A_eq=a_eq, b_eq=[1.0],
                     bounds=bounds, method="highs")
    if result.status != 0:
        raise ValueError(f"Orthant LP failed: {result.message}")
    return float(result.fun)


def _coercivity_value(matrices: np.ndarray, x: np.ndarray) -> float:
    return float(np.max(np.abs(matrices @ x).sum(axis=1)) / np.abs(x).sum())


def _subgradient_search(matrices: np.ndarray, starts: int, iters: int, seed: int) -> float:
    """Best value of max_c ||W_c x||_1 on the L1 sphere over seeded multi-start projected subgradient runs."""
    n = matrices.shape[1]
    seeds = np.random.default_rng(seed).integers(0, 2 ** 31, size=starts)

    def run(start_seed: int) -> float:
        rng = np.random.default_rng(int(start_seed))
        x = rng.standard_normal(n)
        x /= np.abs(x).sum()
        best = _coercivity_value(matrices, x)
        for k in range(iters):
            responses = matrices @ x
            c = int(np.argmax(np.abs(responses).sum(axis=1)))
            grad = matrices[c].T @ np.sign(responses[c])
            # drop the radial part; the objective is 1-homogeneous
            grad = grad - np.dot(grad, np.sign(x)) * np.sign(x) / n
            step = 0.1 / np.sqrt(k + 1.0) / max(np.linalg.norm(grad), 1e-12)
            x = x - step * grad
            scale = np.abs(x).sum()
            if scale == 0.0:
                break
            x /= scale
            best = min(best, _coercivity_value(matrices, x))
        return best

    return float(min(parallel_map(run, list(seeds))))


def gibbs_coercivity(bank: FilterBank, grid: Tuple[int, int], seed: int = 0) -> CoercivityResult:
    """gamma = min over ||x||_1 = 1 of max_c ||W_c x||_1.

    Up to 12 pixels the sphere is covered orthant by orthant with one LP each; x
    and -x give the same value, so the first sign is fixed. Larger grids fall back
    to a multi-start subgradient search whose value is an upper estimate.
    """
    n = int(grid[0] * grid[1])
    if n > DENSE_MAX_VARIABLES:
        raise ValueError(f"Grid {tuple(grid)} has {n} pixels; coercivity is limited to {DENSE_MAX_VARIABLES}")
    matrices = np.stack([bank.channel_matrix(c, tuple(grid)) for c in range(bank.n_channels)])
    if n > EXACT_MAX_VARIABLES:
        gamma = _subgradient_search(matrices, SEARCH_STARTS, SEARCH_ITERS, seed)
        logger.warning(f"Grid has {n} pixels; gamma {gamma:.6g} is an upper estimate from {SEARCH_STARTS} starts")
        return CoercivityResult(gamma=gamma, exact=False)
    patterns = [np.array((1.0,) + tail) for tail in product((1.0, -1.0), repeat=n - 1)]
    values = parallel_map(lambda signs: _orthant_minimum(matrices, signs), patterns)
    gamma = max(0.0, float(min(values)))
    logger.info(f"Coercivity gamma {gamma:.6g} over {len(patterns)} orthants")
    return CoercivityResult(gamma=gamma, exact=True)


def tail_slope(model: AdaptiveRegularizer) -> float:
    """Largest a with psi_c(t) eventually above a|t| for every channel."""
    left, right = model.potential.boundary_slopes
    return float(np.min(min(-left, right) / model.alphas))


def prior_normalizability_check(model: AdaptiveRegularizer, gamma: float, dims: Tuple[int, int], lam: float = 1.0,
                                epsilon: Optional[float] = None) -> PriorCheck:
    """Checks psi_c(t) >= a|t| + b and bounds log of the integral of exp(-lam R).

    With mask weights in [eps, 1], R(x) >= eps a gamma ||x||_1 + C n b_eff, and the
    separable integral of exp(-k|x_i|) is 2/k per pixel.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    a = tail_slope(model)
    lo, hi = model.potential.knot_range
    if a <= 0:
        witness = {"reason": "non-positive tail slope", "point": hi / float(np.min(model.alphas))}
        logger.info(f"Prior not certified: tail slope {a:.6g}")
        return PriorCheck(normalizable=False, log_bound=np.inf, a=a, b=-np.inf, witness=witness)
    reach = 1.5 * max(abs(lo), abs(hi)) / float(np.min(model.alphas))
    grid = np.linspace(-reach, reach, TAIL_GRID_POINTS)
    b = np.inf
    arg = 0.0
    for alpha in model.alphas:
        values, _, _ = model.potential.scaled_eval(alpha, grid)
        gap = values - a * np.abs(grid)
        k = int(np.argmin(gap))
        if gap[k] < b:
            b = float(gap[k])
            arg = float(grid[k])
    if gamma <= 0:
        logger.info("Prior not certified: gamma is zero")
        return PriorCheck(normalizable=False, log_bound=np.inf, a=a, b=b,
                          witness={"reason": "zero coercivity", "gamma": float(gamma)})
    if epsilon is None:
        epsilon = model.mask.epsilon if model.mask is not None else 1.0
    n = int(dims[0] * dims[1])
    b_eff = epsilon * b if b >= 0 else b
    log_bound = -lam * model.n_channels * n * b_eff + n * float(np.log(2.0 / (lam * epsilon * a * gamma)))
    logger.info(f"Prior normalizable: a={a:.6g}, b={b:.6g} at t={arg:.4g}, log bound {log_bound:.6g}")
    return PriorCheck(normalizable=True, log_bound=log_bound, a=a, b=b, witness={"b_argmin": arg})
