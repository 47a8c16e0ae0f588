from lab.coercivity import CoercivityResult, PriorCheck, gibbs_coercivity, prior_normalizability_check
from lab.hoffman import PolyhedralSystem, feasible_subsets, hoffman_constant, hoffman_distance_check, \
    project_onto_polyhedron
from lab.lipschitz import SolutionMapProbe, empirical_mask_sensitivity, empirical_solution_map_lipschitz, \
    mask_sensitivity_bound
from lab.rates import RateExperiment, RateResult, geometric_deltas, vanishing_noise_rates

__all__ = ["CoercivityResult", "PriorCheck", "gibbs_coercivity", "prior_normalizability_check",
           "PolyhedralSystem", "feasible_subsets", "hoffman_constant", "hoffman_distance_check",
           "project_onto_polyhedron", "SolutionMapProbe", "empirical_mask_sensitivity",
           "empirical_solution_map_lipschitz", "mask_sensitivity_bound", "RateExperiment", "RateResult",
           "geometric_deltas", "vanishing_noise_rates"]
