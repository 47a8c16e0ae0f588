import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cnst import defaults
from core.config import TrainSection as TrainConfig
from core.errors import NumericalFailure
from fidelity.fidelity import Fidelity
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import LocalResponseMaskProvider, make_mask
from solver.agd import agd_minimize
from solver.pipeline import initial_guess, solve_stage_two
from solver.problem import ReconstructionProblem
from training.adam import Adam
from training.implicit_gradient import implicit_gradient
from training.parameters import MASK_GROUPS
from training.trainer import group_learning_rates, lr_schedule
from util.parallel import parallel_map

trace_logger = logging.getLogger('training.trace')

Task = Tuple[np.ndarray, np.ndarray]


@dataclass(eq=False)
class FinetuneResult:
    provider: LocalResponseMaskProvider
    loss_trace: List[float] = field(default_factory=list)


class MaskFinetuner:
    """Fits gain, threshold and per-channel offsets of a local-response provider.

    The baseline model stays frozen; stage-one estimates are computed once and the
    loss flows through the second stage only.
    """

    def __init__(self, model: AdaptiveRegularizer, operator_h: LinearOperator, fidelity: Fidelity, lam: float,
                 sigma: float, config: TrainConfig, epsilon: float = defaults.MASK_EPSILON):
        self.logger = logging.getLogger(__name__)
        self.base = model.with_sigma(sigma).with_mask(None)
        self.operator_h = operator_h
        self.fidelity = fidelity
        self.lam = lam
        self.config = config
        self.epsilon = epsilon

    def _stage_one(self, y: np.ndarray) -> np.ndarray:
        problem = ReconstructionProblem(y=y, operator=self.operator_h, fidelity=self.fidelity, regularizer=self.base,
                                        lam=self.lam, init=initial_guess(y, self.operator_h))
        return agd_minimize(problem, tol=self.config.prox_tol, max_iters=self.config.prox_max_iters).x_hat

    def _task_loss(self, provider: LocalResponseMaskProvider, y: np.ndarray, x_true: np.ndarray,
                   x_est: np.ndarray, with_gradient: bool):
        mask = make_mask(provider, x_est, self.base.bank, self.epsilon)
        masked = self.base.with_mask(mask)
        stage2 = solve_stage_two(y, self.operator_h, self.fidelity, masked, self.lam, x_est,
                                 self.config.prox_tol, self.config.prox_max_iters)
        residual = stage2.x_hat - x_true
        loss = float(np.mean(np.abs(residual)))
        if not with_gradient:
            return loss, None
        grads = implicit_gradient(masked, y, stage2.x_hat, np.sign(residual) / residual.size, lam=self.lam,
                                  groups=MASK_GROUPS, operator_h=self.operator_h, fidelity=self.fidelity,
                                  provider=provider, x_est=x_est, epsilon=self.epsilon)
        return loss, grads.values

    def _stage_one_estimates(self, tasks: Sequence[Task]) -> List[np.ndarray]:
        return parallel_map(lambda task: self._stage_one(task[0]), tasks)

    def _mean_loss(self, provider: LocalResponseMaskProvider, tasks: Sequence[Task], estimates: Sequence[np.ndarray],
                   with_gradient: bool = False):
        outputs = parallel_map(lambda k: self._task_loss(provider, tasks[k][0], tasks[k][1], estimates[k],
                                                         with_gradient), range(len(tasks)))
        return float(np.mean([loss for loss, _ in outputs])), outputs

    def evaluate(self, provider: LocalResponseMaskProvider, tasks: Sequence[Task]) -> float:
        """Mean stage-two L1 loss of ``provider`` over the tasks."""
        if not tasks:
            raise ValueError("Mask evaluation needs at least one task image")
        loss, _ = self._mean_loss(provider, tasks, self._stage_one_estimates(tasks))
        return loss

    def finetune(self, provider: LocalResponseMaskProvider, tasks: Sequence[Task]) -> FinetuneResult:
        if not isinstance(provider, LocalResponseMaskProvider):
            raise ValueError("Only local-response mask providers have trainable parameters")
        if not tasks:
            raise ValueError("Mask finetuning needs at least one task image")
        if provider.offsets is None:
            provider = provider.with_parameters({"offsets": np.zeros(self.base.n_channels)})
        estimates = self._stage_one_estimates(tasks)

        def mean_loss(candidate, with_gradient=False):
            return self._mean_loss(candidate, tasks, estimates, with_gradient)

        best_loss, _ = mean_loss(provider)
        best = provider
        result = FinetuneResult(provider=provider, loss_trace=[best_loss])
        optimizer = Adam(group_learning_rates(self.config))
        params = provider.parameters()
        for epoch in range(self.config.epochs):
            loss, outputs = mean_loss(provider, with_gradient=True)
            if not np.isfinite(loss):
                raise NumericalFailure(f"Mask finetuning loss became non-finite in epoch {epoch}", last_good=best)
            grads = {name: np.mean([g[name] for _, g in outputs], axis=0) for name in MASK_GROUPS}
            params = optimizer.step(params, grads, lr_schedule(self.config, epoch))
            params["gain"] = np.maximum(params["gain"], 0.0)
            provider = provider.with_parameters(params)
            new_loss, _ = mean_loss(provider)
            result.loss_trace.append(new_loss)
            trace_logger.info(f"{epoch} {new_loss:.6e} mask")
            self.logger.info(f"Mask epoch {epoch}: loss {new_loss:.6f} gain {provider.gain:.4f} "
                             f"threshold {provider.threshold:.4f}")
            if new_loss < best_loss:
                best_loss = new_loss
                best = provider
        result.provider = best
        return result


def finetune_mask_provider(model: AdaptiveRegularizer, provider: LocalResponseMaskProvider, tasks: Sequence[Task],
                           operator_h: LinearOperator, fidelity: Fidelity, lam: float, sigma: float,
                           config: Optional[TrainConfig] = None) -> FinetuneResult:
    return MaskFinetuner(model, operator_h, fidelity, lam, sigma, config or TrainConfig()).finetune(provider, tasks)
