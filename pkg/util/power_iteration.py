import logging
from typing import Callable, Tuple

import numpy as np

from cnst import defaults

logger = logging.getLogger(__name__)


def power_iteration(forward: Callable[[np.ndarray], np.ndarray], adjoint: Callable[[np.ndarray], np.ndarray],
                    shape: Tuple[int, ...], tol: float = defaults.POWER_TOL,
                    max_iters: int = defaults.POWER_MAX_ITERS, seed: int = defaults.POWER_SEED) -> float:
    """Largest singular value of a linear map given as a forward/adjoint pair.

    Iterates on A^T A from a seeded Gaussian start until the relative change of the
    eigenvalue estimate drops below ``tol``.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    eig_old = 0.0
    eig = 0.0
    for it in range(max_iters):
        x_next = adjoint(forward(x))
        eig = float(np.vdot(x, x_next).real)
        norm = np.linalg.norm(x_next)
        if norm == 0.0:
            return 0.0
        x = x_next / norm
        if eig_old > 0.0 and abs(eig - eig_old) < tol * eig:
            logger.debug(f"Power iteration converged after {it + 1} iterations")
            break
        eig_old = eig
    else:
        logger.debug(f"Power iteration stopped at max_iters={max_iters}")
    return float(np.sqrt(max(eig, 0.0)))
