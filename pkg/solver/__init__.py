from solver.agd import SolverResult, agd_minimize
from solver.grid_search import SearchResult, hyperparameter_search, provider_grid_search
from solver.pipeline import AdaptiveReconstruction, denoising_problem, initial_guess, prox_denoise, \
    reconstruct_adaptive, solve_stage_two
from solver.problem import ReconstructionProblem, optimality_residual

__all__ = ["SolverResult", "agd_minimize", "SearchResult", "hyperparameter_search", "provider_grid_search",
           "AdaptiveReconstruction", "denoising_problem", "initial_guess", "prox_denoise", "reconstruct_adaptive",
           "solve_stage_two", "ReconstructionProblem", "optimality_residual"]
