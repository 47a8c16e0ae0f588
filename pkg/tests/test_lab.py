from itertools import combinations

import numpy as np
import pytest
from scipy.integrate import trapezoid

from filters.filter_bank import FilterBank
from lab.coercivity import gibbs_coercivity, prior_normalizability_check, tail_slope
from lab.hoffman import (PolyhedralSystem, feasible_subsets, hoffman_constant, hoffman_distance_check,
                         project_onto_polyhedron, range_basis)
from lab.lipschitz import (SolutionMapProbe, empirical_mask_sensitivity, empirical_solution_map_lipschitz,
                           inverse_norm)
from lab.rates import RateExperiment, geometric_deltas, vanishing_noise_rates
from operators.blur_stride import BlurStrideOperator
from operators.identity import IdentityOperator
from potentials.spline_potential import SplinePotential
from regularizer.adaptive_regularizer import build_regularizer, unit_alpha_regularizer, zero_regularizer

WITNESS_KERNEL = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, -1.0], [0.0, 0.0, 0.0]])


def _half_line():
    # x >= 0 in one variable
    return PolyhedralSystem(E=np.zeros((0, 1)), F=np.array([[-1.0]]), b=np.zeros(0), q=np.zeros(1))


def test_feasible_subsets_without_inequalities():
    assert feasible_subsets(np.eye(2), np.zeros((0, 2))) == [()]


def test_feasible_subsets_drop_collinear_rows():
    assert feasible_subsets(np.array([[1.0, 0.0]]), np.array([[2.0, 0.0]])) == [()]


def test_feasible_subsets_stop_at_full_rank():
    E = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    F = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, -1.0], [1.0, 1.0, 2.0]])
    assert feasible_subsets(E, F) == [(), (0,), (1,), (2,), (3,)]


def test_feasible_subsets_refuse_large_systems():
    with pytest.raises(ValueError):
        feasible_subsets(np.zeros((0, 13)), np.eye(13))


def test_hoffman_constant_of_pure_equalities():
    assert hoffman_constant(np.array([[2.0]]), np.zeros((0, 1))) == pytest.approx(0.5)
    assert hoffman_constant(np.eye(3), np.zeros((0, 3))) == pytest.approx(1.0)


def test_half_line_distance_is_tight():
    bound, distance = hoffman_distance_check(_half_line(), np.array([-1.0]))
    assert bound == pytest.approx(1.0)
    assert distance == pytest.approx(1.0)


def test_probe_inside_the_polyhedron_has_zero_distance():
    bound, distance = hoffman_distance_check(_half_line(), np.array([2.0]))
    assert bound == 0.0 and distance == 0.0


def test_infeasible_system_is_rejected():
    system = PolyhedralSystem(E=np.zeros((0, 1)), F=np.array([[1.0], [-1.0]]), b=np.zeros(0),
                              q=np.array([-1.0, -1.0]))
    with pytest.raises(ValueError):
        hoffman_distance_check(system, np.array([0.0]))


def test_random_systems_satisfy_the_distance_bound(rng):
    for _ in range(5):
        E = rng.standard_normal((1, 3))
        F = rng.standard_normal((4, 3))
        x0 = rng.standard_normal(3)
        system = PolyhedralSystem(E=E, F=F, b=E @ x0, q=F @ x0 + rng.uniform(0.0, 1.0, 4))
        constant = hoffman_constant(E, F)
        for _ in range(10):
            bound, distance = hoffman_distance_check(system, 3.0 * rng.standard_normal(3), constant)
            assert distance <= bound * (1.0 + 1e-8) + 1e-9


def _brute_force_subsets(E, F):
    rank_e = np.linalg.matrix_rank(E) if E.shape[0] else 0
    found = set()
    for size in range(F.shape[0] + 1):
        for subset in combinations(range(F.shape[0]), size):
            stacked = np.vstack([E, F[list(subset)]])
            rank = np.linalg.matrix_rank(stacked) if stacked.shape[0] else 0
            if rank == rank_e + size:
                found.add(subset)
    return found


def test_feasible_subsets_match_brute_force(rng):
    systems = [(rng.standard_normal((1, 3)), rng.standard_normal((4, 3))) for _ in range(5)]
    systems.append((np.zeros((0, 3)), rng.standard_normal((5, 3))))
    systems.append((np.array([[1.0, 1.0, 0.0]]),
                    np.array([[2.0, 2.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])))
    for E, F in systems:
        found = feasible_subsets(E, F)
        assert len(found) == len(set(found))
        assert set(found) == _brute_force_subsets(E, F)
        for subset in found:
            for k in range(len(subset)):
                assert subset[:k] + subset[k + 1:] in set(found)


def _sampled_inner_minimum(M, n_free, rng, n_samples=10 ** 6):
    """min ||M w|| over sampled unit w with a non-negative cone part, refined around the incumbent."""
    width = M.shape[1]

    def on_sphere(w):
        w[:, n_free:] = np.abs(w[:, n_free:])
        return w / np.linalg.norm(w, axis=1, keepdims=True)

    samples = on_sphere(rng.standard_normal((n_samples, width)))
    norms = np.linalg.norm(samples @ M.T, axis=1)
    k = int(np.argmin(norms))
    best, value = samples[k], float(norms[k])
    for radius in (1e-2, 1e-3, 1e-4, 1e-5):
        local = on_sphere(best + radius * rng.standard_normal((n_samples // 10, width)))
        local_norms = np.linalg.norm(local @ M.T, axis=1)
        k = int(np.argmin(local_norms))
        if local_norms[k] < value:
            best, value = local[k], float(local_norms[k])
    return value


def test_hoffman_constant_matches_a_sampling_oracle(rng):
    for _ in range(25):
        n = int(rng.integers(2, 4))
        n_eq = int(rng.integers(0, 2))
        n_ineq = int(rng.integers(1, 5 - n_eq))
        E = rng.standard_normal((n_eq, n))
        F = rng.standard_normal((n_ineq, n))
        exact = hoffman_constant(E, F)
        basis = range_basis(E)
        sampled = max(1.0 / _sampled_inner_minimum(np.hstack([E.T @ basis, F[list(subset)].T]), basis.shape[1], rng)
                      for subset in feasible_subsets(E, F) if basis.shape[1] + len(subset) > 0)
        assert sampled <= exact * (1.0 + 1e-9)
        assert sampled == pytest.approx(exact, rel=1e-2)


def test_projection_lands_in_the_polyhedron(rng):
    E = np.array([[1.0, 1.0]])
    F = np.array([[-1.0, 0.0], [0.0, -1.0]])
    system = PolyhedralSystem(E=E, F=F, b=np.array([1.0]), q=np.zeros(2))
    point = project_onto_polyhedron(system, np.array([2.0, -3.0]))
    np.testing.assert_allclose(point, [1.0, 0.0], atol=1e-10)


def test_dirac_bank_has_unit_coercivity(dirac_bank):
    result = gibbs_coercivity(dirac_bank, (2, 2))
    assert result.exact
    assert result.gamma == pytest.approx(1.0, abs=1e-9)


def test_shared_null_vector_gives_zero_coercivity():
    result = gibbs_coercivity(FilterBank(WITNESS_KERNEL), (1, 3))
    assert result.gamma == pytest.approx(0.0, abs=1e-9)


def test_coercivity_scales_with_the_filters(small_bank):
    base = gibbs_coercivity(small_bank, (2, 2)).gamma
    assert gibbs_coercivity(small_bank.scaled(2.0), (2, 2)).gamma == pytest.approx(2.0 * base, rel=1e-6, abs=1e-9)


def _sampled_coercivity(matrices, rng, n_samples=10 ** 6):
    """Global sampling of the L1 sphere, then resampling around the 20 best points on shrinking scales."""
    n = matrices.shape[2]

    def values(x):
        return np.abs(np.einsum("cij,sj->sci", matrices, x)).sum(axis=2).max(axis=1) / np.abs(x).sum(axis=1)

    samples = rng.standard_normal((n_samples, n))
    scores = np.concatenate([values(chunk) for chunk in np.array_split(samples, 10)])
    best = float(scores.min())
    for start in samples[np.argsort(scores)[:20]]:
        point = start / np.abs(start).sum()
        value = float(values(point[None])[0])
        for radius in (1e-2, 1e-3, 1e-4, 1e-5):
            local = point + radius * rng.standard_normal((20000, n))
            local_values = values(local)
            k = int(np.argmin(local_values))
            if local_values[k] < value:
                point, value = local[k] / np.abs(local[k]).sum(), float(local_values[k])
        best = min(best, value)
    return best


@pytest.mark.parametrize("bank_kind", ["dct", "random"])
def test_coercivity_matches_a_sampling_oracle(rng, small_bank, bank_kind):
    bank = small_bank if bank_kind == "dct" else FilterBank(rng.standard_normal((2, 3, 3)))
    result = gibbs_coercivity(bank, (2, 2))
    matrices = np.stack([bank.channel_matrix(c, (2, 2)) for c in range(bank.n_channels)])
    sampled = _sampled_coercivity(matrices, rng)
    assert result.exact
    assert result.gamma >= 0.0
    assert result.gamma <= sampled + 1e-9
    assert sampled - result.gamma < 1e-3


def test_large_grids_fall_back_to_search(dirac_bank):
    result = gibbs_coercivity(dirac_bank, (4, 4))
    assert not result.exact
    assert result.gamma == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        gibbs_coercivity(dirac_bank, (9, 9))


def test_default_prior_is_normalizable(dirac_bank):
    model = unit_alpha_regularizer(dirac_bank, SplinePotential.create())
    assert tail_slope(model) == pytest.approx(0.1)
    check = prior_normalizability_check(model, gamma=1.0, dims=(1, 2))
    assert check.normalizable
    assert check.b == pytest.approx(-0.005, abs=1e-6)
    assert check.log_bound == pytest.approx(0.01 + 2 * np.log(20.0), abs=1e-4)


def test_prior_bound_dominates_the_integral(dirac_bank):
    potential = SplinePotential.create()
    model = unit_alpha_regularizer(dirac_bank, potential)
    check = prior_normalizability_check(model, gamma=1.0, dims=(1, 2))
    t = np.linspace(-10.0, 10.0, 20001)
    values, _, _ = potential.eval(t)
    per_pixel = trapezoid(np.exp(-values), t)
    assert per_pixel ** 2 <= np.exp(check.log_bound)


def test_bounded_potential_is_not_normalizable(dirac_bank):
    plus = np.zeros(100)
    plus[25:75] = 1.0
    minus = np.ones(100)
    minus[25:75] = 0.0
    potential = SplinePotential(second_derivs_plus=plus, second_derivs_minus=minus, c_cvx=1, knot_count=101,
                                spacing=0.25)
    model = unit_alpha_regularizer(dirac_bank, potential)
    check = prior_normalizability_check(model, gamma=1.0, dims=(2, 2))
    assert not check.normalizable
    assert check.a == pytest.approx(0.0, abs=1e-12)
    assert check.witness["reason"] == "non-positive tail slope"


def test_zero_coercivity_is_not_normalizable(dirac_bank):
    model = unit_alpha_regularizer(dirac_bank, SplinePotential.create())
    check = prior_normalizability_check(model, gamma=0.0, dims=(2, 2))
    assert not check.normalizable
    assert check.witness["reason"] == "zero coercivity"


def test_zero_regularizer_solution_map_is_the_identity(rng, small_bank):
    probe = SolutionMapProbe(zero_regularizer(small_bank), IdentityOperator((4, 4)), rng.uniform(size=(4, 4)))
    ratio, bound = empirical_solution_map_lipschitz(probe, n_pairs=5)
    assert ratio == pytest.approx(1.0, rel=1e-12)
    assert bound == 1.0


def test_convex_denoiser_is_non_expansive(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    probe = SolutionMapProbe(model, IdentityOperator((8, 8)), rng.uniform(size=(8, 8)))
    ratio, bound = empirical_solution_map_lipschitz(probe, n_pairs=10)
    assert ratio <= bound * (1.0 + 1e-3)


def test_mask_sensitivity_stays_below_the_bound(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    probe = SolutionMapProbe(model, IdentityOperator((6, 6)), rng.uniform(size=(6, 6)), lam=2.0)
    ratio, bound = empirical_mask_sensitivity(probe, n_pairs=5)
    assert 0.0 < ratio <= bound


def test_solution_map_probe_needs_a_convex_model(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(c_cvx=1))
    probe = SolutionMapProbe(model, IdentityOperator((4, 4)), rng.uniform(size=(4, 4)))
    with pytest.raises(ValueError):
        empirical_solution_map_lipschitz(probe, n_pairs=2)


def test_inverse_norm_rejects_non_square_operators():
    with pytest.raises(ValueError):
        inverse_norm(BlurStrideOperator((8, 8), kernel_size=3, std=1.0, stride=2))
    assert inverse_norm(IdentityOperator((3, 3))) == 1.0


def test_rates_match_the_quadratic_closed_form(rng, dirac_bank, quadratic_potential):
    model = unit_alpha_regularizer(dirac_bank, quadratic_potential)
    x_true = rng.uniform(size=(4, 4))
    deltas = geometric_deltas(0.1, 1e-4, 4)
    seeds = (0, 1)
    result = vanishing_noise_rates(RateExperiment(model, IdentityOperator((4, 4)), x_true, deltas, seeds=seeds))
    x_zero = x_true / (1.0 + 1e-8)
    for i, seed in enumerate(seeds):
        direction = np.random.default_rng(seed).standard_normal((4, 4))
        direction /= np.linalg.norm(direction)
        for k, delta in enumerate(deltas):
            lam = np.sqrt(delta)
            expected = np.linalg.norm((x_true + delta * direction) / (1.0 + lam) - x_zero)
            assert result.errors[i, k] == pytest.approx(expected, abs=1e-7)
    np.testing.assert_allclose(result.lambdas, np.sqrt(deltas))
    assert not result.degenerate and result.slope is not None


def test_noiseless_zero_image_is_degenerate(quadratic_model):
    experiment = RateExperiment(quadratic_model, IdentityOperator((4, 4)), np.zeros((4, 4)),
                                geometric_deltas(0.1, 1e-3, 4), seeds=(0,), noise_scale=0.0)
    result = vanishing_noise_rates(experiment)
    assert result.degenerate
    assert result.slope is None


def test_rate_experiment_validation(quadratic_model, small_bank):
    op = IdentityOperator((4, 4))
    with pytest.raises(ValueError):
        RateExperiment(quadratic_model, op, np.zeros((4, 4)), [0.1, 0.01, 0.001])
    with pytest.raises(ValueError):
        RateExperiment(quadratic_model, op, np.zeros((4, 4)), [0.001, 0.01, 0.1, 1.0])
    with pytest.raises(ValueError):
        geometric_deltas(0.1, 0.2, 4)
    weakly = build_regularizer(small_bank, SplinePotential.create(c_cvx=1))
    with pytest.raises(ValueError):
        vanishing_noise_rates(RateExperiment(weakly, op, np.zeros((4, 4)), geometric_deltas(0.1, 1e-3, 4)))


@pytest.mark.slow
def test_desk_scale_solution_map_probe(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    probe = SolutionMapProbe(model, IdentityOperator((32, 32)), rng.uniform(size=(32, 32)))
    ratio, bound = empirical_solution_map_lipschitz(probe, n_pairs=50)
    assert ratio <= bound * (1.0 + 1e-3)


@pytest.mark.slow
def test_desk_scale_rate_slope(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    yy, xx = np.mgrid[0:16, 0:16] / 16.0
    x_true = 0.5 + 0.3 * np.sin(2 * np.pi * xx) * np.cos(2 * np.pi * yy)
    experiment = RateExperiment(model, IdentityOperator((16, 16)), x_true, geometric_deltas(1e-1, 1e-4, 7))
    result = vanishing_noise_rates(experiment)
    assert 0.35 <= result.slope <= 0.65
