import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.config import TrainSection as TrainConfig
from core.errors import NumericalFailure
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from solver.pipeline import prox_denoise
from training.adam import Adam
from training.implicit_gradient import implicit_gradient
from training.parameters import model_parameters, trainable_groups, with_model_parameters
from util.parallel import parallel_map

trace_logger = logging.getLogger('training.trace')


@dataclass(eq=False)
class TrainingResult:
    model: AdaptiveRegularizer
    loss_trace: List[float] = field(default_factory=list)
    val_trace: List[float] = field(default_factory=list)
    best_epoch: int = 0


def lr_schedule(config: TrainConfig, epoch: int) -> float:
    """Learning-rate factor: linear decay to one half over the first ``lr_decay_epochs`` epochs."""
    if config.lr_decay_epochs <= 0:
        return 1.0
    return 1.0 - 0.5 * min(epoch, config.lr_decay_epochs) / config.lr_decay_epochs


def group_learning_rates(config: TrainConfig) -> Dict[str, float]:
    return {
        "psi_plus": config.lr_spline,
        "psi_minus": config.lr_spline,
        "log_mu": config.lr_mu,
        "scaling": config.lr_scaling,
        "gain": config.lr_mask,
        "threshold": config.lr_mask,
        "offsets": config.lr_mask,
    }


class DenoiserTrainer:
    """Supervised training of the prox denoiser with an L1 loss and implicit gradients."""

    def __init__(self, config: TrainConfig, lam: float = 1.0):
        self.config = config
        self.lam = lam
        self.logger = logging.getLogger(__name__)

    def _sample(self, model: AdaptiveRegularizer, clean: np.ndarray, sigma: float, noise: np.ndarray,
                groups) -> Tuple[float, Dict[str, np.ndarray]]:
        noisy = clean + sigma * noise
        result = prox_denoise(model, noisy, sigma, self.lam, tol=self.config.prox_tol,
                              max_iters=self.config.prox_max_iters)
        residual = result.x_hat - clean
        loss = float(np.mean(np.abs(residual)))
        loss_grad = np.sign(residual) / residual.size
        grads = implicit_gradient(model.with_sigma(sigma).with_mask(None), noisy, result.x_hat, loss_grad,
                                  lam=self.lam, groups=groups)
        return loss, grads.values

    def _validation_mse(self, model: AdaptiveRegularizer, patches: np.ndarray, noise: np.ndarray) -> float:
        sigma = self.config.val_sigma

        def denoise(k: int) -> float:
            result = prox_denoise(model, patches[k] + sigma * noise[k], sigma, self.lam,
                                  tol=self.config.prox_tol, max_iters=self.config.prox_max_iters)
            return float(np.mean((result.x_hat - patches[k]) ** 2))

        return float(np.mean(parallel_map(denoise, range(len(patches)))))

    def train(self, model: AdaptiveRegularizer, patches: np.ndarray) -> TrainingResult:
        config = self.config
        patches = np.asarray(patches, dtype=float)
        if patches.ndim != 3 or len(patches) == 0:
            raise ValueError("Training needs a non-empty stack of 2D patches")
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(len(patches))
        n_val = int(round(config.val_fraction * len(patches))) if len(patches) > 1 else 0
        val_idx = np.sort(order[:n_val])
        train_idx = np.sort(order[n_val:]) if n_val < len(patches) else np.sort(order)
        val_patches = patches[val_idx] if n_val else patches[train_idx]

        # one fixed noisy copy per patch
        if config.fixed_sigma is not None:
            sigmas = np.full(len(patches), config.fixed_sigma)
        else:
            sigmas = rng.uniform(config.sigma_min, config.sigma_max, size=len(patches))
        noise = rng.standard_normal(patches.shape)
        val_noise = rng.standard_normal(val_patches.shape)

        groups = trainable_groups(model, config.train_spline)
        optimizer = Adam(group_learning_rates(config))
        params = model_parameters(model)
        best_model = model
        best_val = self._validation_mse(model, val_patches, val_noise)
        result = TrainingResult(model=model, val_trace=[best_val])
        self.logger.info(f"Training on {len(train_idx)} patches, {len(val_patches)} validation, groups {groups}")

        for epoch in range(config.epochs):
            factor = lr_schedule(config, epoch)
            losses = np.zeros(len(patches))
            batch_order = rng.permutation(train_idx)
            for start in range(0, len(batch_order), config.batch_size):
                batch = np.sort(batch_order[start:start + config.batch_size])
                outputs = parallel_map(lambda k: self._sample(model, patches[k], sigmas[k], noise[k], groups),
                                       batch)
                batch_losses = [loss for loss, _ in outputs]
                if not np.all(np.isfinite(batch_losses)):
                    self.logger.error(f"Loss diverged in epoch {epoch}")
                    raise NumericalFailure(f"Training loss became non-finite in epoch {epoch}", last_good=best_model)
                losses[batch] = batch_losses
                grads = {name: np.mean([g[name] for _, g in outputs], axis=0) for name in groups}
                if not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise NumericalFailure(f"Non-finite parameter gradient in epoch {epoch}", last_good=best_model)
                updated = optimizer.step(params, grads, factor)
                changed = {name: updated[name] for name in groups if updated[name] is not params[name]}
                if changed:
                    model = with_model_parameters(model, changed)
                    params = model_parameters(model)

            train_l1 = float(np.mean(losses[train_idx]))
            val_mse = self._validation_mse(model, val_patches, val_noise)
            result.loss_trace.append(train_l1)
            result.val_trace.append(val_mse)
            trace_logger.info(f"{epoch} {train_l1:.6e} {val_mse:.6e}")
            self.logger.info(f"Epoch {epoch}: train L1 {train_l1:.6f}, validation MSE {val_mse:.6e}")
            if val_mse < best_val:
                best_val = val_mse
                best_model = model
                result.best_epoch = epoch + 1

        result.model = best_model
        return result


def train_denoiser(model: AdaptiveRegularizer, patches: np.ndarray, config: Optional[TrainConfig] = None,
                   lam: float = 1.0) -> TrainingResult:
    return DenoiserTrainer(config or TrainConfig(), lam).train(model, patches)
