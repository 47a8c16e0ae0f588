from fidelity.ct_poisson import CTPoissonFidelity
from fidelity.fidelity import Fidelity, fidelity_gradient_wrt_hx, fidelity_hessian_diag, fidelity_value
from fidelity.fidelity_factory import FidelityFactory
from fidelity.noise import NoiseSpec, simulate_data
from fidelity.scaled_quadratic import ScaledQuadraticFidelity

__all__ = ["CTPoissonFidelity", "Fidelity", "fidelity_gradient_wrt_hx", "fidelity_hessian_diag", "fidelity_value",
           "FidelityFactory", "NoiseSpec", "simulate_data", "ScaledQuadraticFidelity"]
