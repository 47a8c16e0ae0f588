import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator as ScipyLinearOperator
from scipy.sparse.linalg import cg

from cnst import defaults
from fidelity.fidelity import Fidelity
from fidelity.scaled_quadratic import ScaledQuadraticFidelity
from operators.identity import IdentityOperator
from operators.linear_operator import LinearOperator
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import MaskProvider
from training.parameters import MASK_GROUPS

logger = logging.getLogger(__name__)

CG_MAX_ITERS = 500


@dataclass(eq=False)
class ParameterGradients:
    values: Dict[str, np.ndarray] = field(default_factory=dict)
    cg_converged: bool = True
    indefinite: bool = False

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.values.values())


def _solve_adjoint(model: AdaptiveRegularizer, x_hat: np.ndarray, loss_grad: np.ndarray, lam: float,
                   operator_h: LinearOperator, fidelity: Fidelity, y: np.ndarray, cg_tol: float):
    """Solve (H^T D'' H + lam Hess R) z = loss_grad by conjugate gradients."""
    shape = x_hat.shape
    n = x_hat.size
    hx = operator_h.apply(x_hat)
    data_curvature = fidelity.hessian_diag(hx, y)
    reg_curvature = model.curvature_weights(x_hat)

    def matvec(v):
        v = np.asarray(v).reshape(shape)
        data_part = operator_h.adjoint(data_curvature * operator_h.apply(v))
        return (data_part + lam * model.hessian_vector(x_hat, v, reg_curvature)).ravel()

    hessian = ScipyLinearOperator((n, n), matvec=matvec, dtype=float)
    z, info = cg(hessian, loss_grad.ravel(), rtol=cg_tol, atol=0.0, maxiter=CG_MAX_ITERS)
    converged = info == 0
    if not converged:
        logger.warning(f"Conjugate gradients did not converge in {CG_MAX_ITERS} iterations (info={info})")
    curvature = float(np.vdot(z, matvec(z)))
    indefinite = curvature <= 0.0 and np.any(z)
    if indefinite:
        logger.warning(f"Hessian is not positive along the adjoint direction (z^T A z = {curvature:.3e})")
    return z.reshape(shape), converged, bool(indefinite)


def implicit_gradient(model: AdaptiveRegularizer, y: np.ndarray, x_hat: np.ndarray, loss_grad_at_xhat: np.ndarray,
                      lam: float = 1.0, groups: Sequence[str] = ("psi_plus", "log_mu", "scaling"),
                      operator_h: Optional[LinearOperator] = None, fidelity: Optional[Fidelity] = None,
                      provider: Optional[MaskProvider] = None, x_est: Optional[np.ndarray] = None,
                      epsilon: float = defaults.MASK_EPSILON, cg_tol: float = 1e-10) -> ParameterGradients:
    """Gradient of a loss of x_hat with respect to model and mask parameters.

    x_hat solves grad g(x; theta) = 0, so d loss / d theta = -z^T d_theta grad g with
    A z = d loss / d x_hat. Mask groups need the provider and the estimate it was applied to.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    loss_grad = np.asarray(loss_grad_at_xhat, dtype=float)
    operator_h = operator_h if operator_h is not None else IdentityOperator(x_hat.shape)
    fidelity = fidelity if fidelity is not None else ScaledQuadraticFidelity(1.0)
    z, converged, indefinite = _solve_adjoint(model, x_hat, loss_grad, lam, operator_h, fidelity, y, cg_tol)

    potential = model.potential
    responses, _, slopes, curvatures = model.channel_terms(x_hat)
    weights = model.weights(x_hat.shape)
    # -lam * W_c z enters every mixed partial
    adjoint_responses = -lam * model.bank.apply(z)

    values: Dict[str, np.ndarray] = {}
    n_int = potential.n_intervals
    plus = np.zeros(n_int)
    minus = np.zeros(n_int)
    log_mu = 0.0
    scaling = np.zeros((model.n_channels, model.noise_scalings[0].values.size))
    for c in range(model.n_channels):
        alpha = model.alphas[c]
        u = alpha * responses[c].ravel()
        coupling = (adjoint_responses[c] * weights[c]).ravel()
        if "psi_plus" in groups or "psi_minus" in groups or "log_mu" in groups:
            basis = potential.slope_sensitivity(u)
            projected = coupling @ basis / alpha
            plus += potential.mu * projected
            minus -= potential.c_cvx * projected
            log_mu += potential.mu * float(projected @ potential.second_derivs_plus)
        if "scaling" in groups:
            # d psi_c'(r) / d alpha = -psi'(alpha r) / alpha^2 + psi''(alpha r) r / alpha
            d_alpha = -slopes[c] / alpha + curvatures[c] * responses[c] / alpha
            weights_sigma = model.noise_scalings[c].interpolation_weights(model.sigma)
            scaling[c] = float(np.sum(coupling.reshape(d_alpha.shape) * d_alpha)) * alpha * weights_sigma

    if "psi_plus" in groups:
        values["psi_plus"] = plus
    if "psi_minus" in groups:
        values["psi_minus"] = minus
    if "log_mu" in groups:
        values["log_mu"] = np.array([log_mu])
    if "scaling" in groups:
        values["scaling"] = scaling

    mask_groups = [g for g in groups if g in MASK_GROUPS]
    if mask_groups:
        if provider is None or x_est is None:
            raise ValueError("Mask parameter gradients need the provider and the estimate it was applied to")
        jacobians = provider.parameter_jacobians(x_est, model.bank, epsilon)
        mixed = adjoint_responses * slopes
        for name in mask_groups:
            if name == "offsets":
                values[name] = np.sum(mixed * jacobians[name], axis=(1, 2))
            else:
                values[name] = np.array([float(np.sum(mixed * jacobians[name]))])

    return ParameterGradients(values=values, cg_converged=converged, indefinite=indefinite)
