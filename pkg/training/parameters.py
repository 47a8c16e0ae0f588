from typing import Dict, Iterable

import numpy as np

from potentials.noise_scaling import NoiseScaling
from potentials.spline_potential import project_coefficients
from regularizer.adaptive_regularizer import AdaptiveRegularizer

SPLINE_GROUPS = ("psi_plus", "psi_minus")
MODEL_GROUPS = ("psi_plus", "psi_minus", "log_mu", "scaling")
MASK_GROUPS = ("gain", "threshold", "offsets")


def model_parameters(model: AdaptiveRegularizer) -> Dict[str, np.ndarray]:
    potential = model.potential
    return {
        "psi_plus": potential.second_derivs_plus.copy(),
        "psi_minus": potential.second_derivs_minus.copy(),
        "log_mu": np.array([np.log(potential.mu)]),
        "scaling": np.stack([scaling.values for scaling in model.noise_scalings]),
    }


def with_model_parameters(model: AdaptiveRegularizer, params: Dict[str, np.ndarray]) -> AdaptiveRegularizer:
    potential = model.potential
    changes = {}
    if "psi_plus" in params:
        changes["second_derivs_plus"] = project_coefficients(params["psi_plus"])
    if "psi_minus" in params:
        changes["second_derivs_minus"] = project_coefficients(params["psi_minus"])
    if "log_mu" in params:
        changes["mu"] = float(np.exp(np.asarray(params["log_mu"]).reshape(-1)[0]))
    updated = model.with_potential(potential.replace(**changes)) if changes else model
    if "scaling" in params:
        updated = updated.with_noise_scalings([NoiseScaling(values=row) for row in np.asarray(params["scaling"])])
    return updated


def trainable_groups(model: AdaptiveRegularizer, train_spline: bool = True) -> Iterable[str]:
    groups = ["log_mu", "scaling"]
    if train_spline:
        groups.insert(0, "psi_plus")
        if model.potential.c_cvx == 1:
            groups.insert(1, "psi_minus")
    return tuple(groups)
