import logging
import time
from dataclasses import dataclass, field
from typing import List

import numpy as np

from cnst import defaults
from core.errors import NumericalFailure
from solver.problem import ReconstructionProblem

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class SolverResult:
    x_hat: np.ndarray
    iterations: int
    final_gradient_norm: float
    objective_trace: np.ndarray
    converged: bool
    runtime_seconds: float = 0.0
    restart_objectives: List[float] = field(default_factory=list)


def nesterov_momentum(t: float) -> float:
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))


def agd_minimize(problem: ReconstructionProblem, tol: float = defaults.SOLVER_TOL,
                 max_iters: int = defaults.SOLVER_MAX_ITERS) -> SolverResult:
    """Nesterov-accelerated gradient descent with step 1/L and gradient-based adaptive restart.

    Stops once ||grad g(x_k)|| <= tol * max(1, ||grad g(x_0)||). A restart that follows
    an objective increase falls back to the previous iterate, or to the last restart
    point if that is lower, so objectives at restart points never increase.
    """
    started = time.perf_counter()
    lipschitz = problem.lipschitz()
    if not np.isfinite(lipschitz) or lipschitz <= 0:
        raise ValueError(f"Gradient Lipschitz bound must be finite and positive, got {lipschitz}")
    step = 1.0 / lipschitz

    x = problem.init.copy()
    f_x = problem.objective(x)
    if not np.isfinite(f_x):
        raise NumericalFailure(f"Objective is not finite at the initial point ({f_x})", last_good=x)
    g_x = problem.gradient(x)
    threshold = tol * max(1.0, float(np.linalg.norm(g_x)))
    trace = [f_x]
    restarts: List[float] = []
    anchor = (x, f_x, g_x)
    z = x.copy()
    t = 1.0
    converged = bool(np.linalg.norm(g_x) <= threshold)
    iterations = 0

    while not converged and iterations < max_iters:
        iterations += 1
        g_z = g_x if z is x else problem.gradient(z)
        x_new = z - step * g_z
        f_new = problem.objective(x_new)
        if not np.isfinite(f_new):
            logger.error(f"Non-finite objective at iteration {iterations}")
            raise NumericalFailure(f"Objective became non-finite at iteration {iterations}", last_good=x)
        g_new = problem.gradient(x_new)

        if float(np.vdot(g_new, x_new - x)) > 0.0:
            if f_new > f_x:
                x_new, f_new, g_new = x, f_x, g_x
            if restarts and f_new > restarts[-1]:
                x_new, f_new, g_new = anchor
            anchor = (x_new, f_new, g_new)
            restarts.append(f_new)
            t = 1.0
            z = x_new
        else:
            t_next = nesterov_momentum(t)
            z = x_new + ((t - 1.0) / t_next) * (x_new - x)
            t = t_next

        x, f_x, g_x = x_new, f_new, g_new
        trace.append(f_x)
        converged = bool(np.linalg.norm(g_x) <= threshold)
        if iterations % 100 == 0:
            logger.debug(f"AGD iteration {iterations}: objective {f_x:.10g}, |grad| {np.linalg.norm(g_x):.3e}")

    residual = float(np.linalg.norm(g_x) / np.sqrt(problem.n_pixels))
    runtime = time.perf_counter() - started
    if len(restarts) > iterations // 2 and iterations > 20:
        logger.warning(f"AGD restarted {len(restarts)} times in {iterations} iterations")
    if not converged:
        logger.warning(f"AGD stopped at max_iters={max_iters} with residual {residual:.3e}")
    logger.debug(f"AGD finished after {iterations} iterations in {runtime:.3f}s (converged={converged})")
    return SolverResult(x_hat=x, iterations=iterations, final_gradient_norm=residual,
                        objective_trace=np.asarray(trace), converged=converged, runtime_seconds=runtime,
                        restart_objectives=restarts)
