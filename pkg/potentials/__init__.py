from potentials.noise_scaling import NoiseScaling, noise_alpha
from potentials.spline_potential import SplinePotential, default_psi_minus, project_coefficients

__all__ = ["NoiseScaling", "noise_alpha", "SplinePotential", "default_psi_minus", "project_coefficients"]
