import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from cnst import defaults
from fidelity.scaled_quadratic import ScaledQuadraticFidelity
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from solver.agd import agd_minimize
from solver.pipeline import initial_guess
from solver.problem import ReconstructionProblem
from util.parallel import parallel_map

logger = logging.getLogger(__name__)

MIN_LEVELS = 4
DEGENERATE_ERROR = 1e-8


def geometric_deltas(delta_max: float, delta_min: float, n_levels: int) -> np.ndarray:
    if not 0.0 < delta_min < delta_max:
        raise ValueError(f"Need 0 < delta_min < delta_max, got {delta_min}, {delta_max}")
    return np.geomspace(delta_max, delta_min, n_levels)


@dataclass(eq=False)
class RateExperiment:
    regularizer: AdaptiveRegularizer
    operator: LinearOperator
    x_true: np.ndarray
    deltas: Sequence[float]
    rate_c: float = 1.0
    seeds: Sequence[int] = (0, 1, 2, 3, 4)
    noise_scale: float = 1.0
    tol: float = 1e-9
    max_iters: int = 20000

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        if self.deltas.size < MIN_LEVELS:
            raise ValueError(f"Rate experiments need at least {MIN_LEVELS} noise levels, got {self.deltas.size}")
        if np.any(np.diff(self.deltas) >= 0):
            raise ValueError("Noise levels must be strictly decreasing")


@dataclass(eq=False)
class RateResult:
    deltas: np.ndarray
    errors: np.ndarray
    slope: Optional[float]
    degenerate: bool = False
    lambdas: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _solve(experiment: RateExperiment, y: np.ndarray, lam: float) -> np.ndarray:
    problem = ReconstructionProblem(y=y, operator=experiment.operator, fidelity=ScaledQuadraticFidelity(1.0),
                                    regularizer=experiment.regularizer, lam=lam,
                                    init=initial_guess(y, experiment.operator))
    return agd_minimize(problem, tol=experiment.tol, max_iters=experiment.max_iters).x_hat


def vanishing_noise_rates(experiment: RateExperiment) -> RateResult:
    """Fit the log-log slope of ||x_delta - x_0|| against delta with lam = c sqrt(delta).

    Noise is a unit-norm direction scaled to delta (times ``noise_scale``); x_0 uses
    the lambda floor in place of the constrained noiseless solution.
    """
    if experiment.regularizer.potential.c_cvx != 0:
        raise ValueError("Rate experiments need a convex model (c_cvx = 0)")
    if not experiment.operator.is_identity:
        logger.warning("Operator is not the identity; the lambda-floor limit only matches the noiseless "
                       "solution when H is invertible")
    clean = experiment.operator.apply(experiment.x_true)
    x_zero = _solve(experiment, clean, defaults.LAMBDA_FLOOR)
    lambdas = experiment.rate_c * np.sqrt(experiment.deltas)

    def run(seed: int) -> np.ndarray:
        direction = np.random.default_rng(seed).standard_normal(clean.shape)
        direction /= np.linalg.norm(direction)
        errors = np.empty(experiment.deltas.size)
        for k, (delta, lam) in enumerate(zip(experiment.deltas, lambdas)):
            y = clean + experiment.noise_scale * delta * direction
            errors[k] = np.linalg.norm(_solve(experiment, y, lam) - x_zero)
        return errors

    errors = np.stack(parallel_map(run, list(experiment.seeds)))
    mean_errors = errors.mean(axis=0)
    if np.max(mean_errors) < DEGENERATE_ERROR:
        logger.info("All reconstruction errors are at solver tolerance; slope fit skipped")
        return RateResult(deltas=experiment.deltas, errors=errors, slope=None, degenerate=True, lambdas=lambdas)
    slope = float(np.polyfit(np.log(experiment.deltas), np.log(np.maximum(mean_errors, 1e-300)), 1)[0])
    logger.info(f"Vanishing-noise slope {slope:.4f} over {experiment.deltas.size} levels")
    return RateResult(deltas=experiment.deltas, errors=errors, slope=slope, lambdas=lambdas)
