import numpy as np
import pytest
from scipy.special import expit

from filters.filter_bank import FilterBank
from potentials.spline_potential import SplinePotential
from regularizer.adaptive_regularizer import AdaptiveRegularizer, build_regularizer, zero_regularizer
from regularizer.mask import (ConstantMaskProvider, FileMaskProvider, LocalResponseMaskProvider,
                              MaskProviderFactory, SpatialMask, average_mask)
from util.grid_io import write_grid


@pytest.fixture
def weakly_convex_model(rng, small_bank):
    potential = SplinePotential.create(rng.uniform(size=100), rng.uniform(size=100), mu=1.3, c_cvx=1)
    return build_regularizer(small_bank, potential)


def test_gradient_matches_finite_differences(rng, weakly_convex_model):
    x = 0.02 * rng.standard_normal((8, 8))
    v = rng.standard_normal((8, 8))
    h = 1e-6
    numeric = (weakly_convex_model.evaluate(x + h * v) - weakly_convex_model.evaluate(x - h * v)) / (2 * h)
    analytic = np.sum(weakly_convex_model.gradient(x) * v)
    assert numeric == pytest.approx(analytic, rel=1e-5, abs=1e-9)


def test_evaluate_is_the_sum_of_the_cost_map(rng, weakly_convex_model):
    x = 0.02 * rng.standard_normal((6, 7))
    assert weakly_convex_model.evaluate(x) == pytest.approx(weakly_convex_model.cost_map(x).sum(), rel=1e-12)


def test_quadratic_model_hessian_is_the_filter_gram(rng, quadratic_model, small_bank, dense_gram):
    x = rng.standard_normal((5, 5))
    v = rng.standard_normal((5, 5))
    expected = (dense_gram(small_bank, (5, 5)) @ v.ravel()).reshape(5, 5)
    np.testing.assert_allclose(quadratic_model.hessian_vector(x, v), expected, atol=1e-10)
    h = 1e-4
    numeric = (quadratic_model.gradient(x + h * v) - quadratic_model.gradient(x - h * v)) / (2 * h)
    np.testing.assert_allclose(numeric, expected, atol=1e-7)


def test_gradient_is_lipschitz_with_the_reported_constant(rng, weakly_convex_model):
    bound = weakly_convex_model.lipschitz_gradient_bound((8, 8))
    for _ in range(5):
        x = 0.05 * rng.standard_normal((8, 8))
        z = 0.05 * rng.standard_normal((8, 8))
        gap = np.linalg.norm(weakly_convex_model.gradient(x) - weakly_convex_model.gradient(z))
        assert gap <= 1.001 * bound * np.linalg.norm(x - z)


def test_zero_kernels_give_zero_cost_and_gradient(rng):
    model = zero_regularizer(FilterBank(np.zeros((2, 3, 3))))
    x = rng.standard_normal((4, 4))
    assert model.evaluate(x) == 0.0
    np.testing.assert_array_equal(model.gradient(x), 0.0)


def test_zero_potential_gives_zero_cost(rng, small_bank):
    model = zero_regularizer(small_bank)
    x = rng.standard_normal((4, 4))
    assert model.evaluate(x) == 0.0
    np.testing.assert_array_equal(model.gradient(x), 0.0)


def test_mask_scales_the_cost_map(rng, quadratic_model):
    x = rng.standard_normal((4, 4))
    mask = SpatialMask(weights=np.full((3, 4, 4), 0.5))
    assert quadratic_model.with_mask(mask).evaluate(x) == pytest.approx(0.5 * quadratic_model.evaluate(x))


def test_mask_shape_mismatch_is_rejected(quadratic_model):
    masked = quadratic_model.with_mask(SpatialMask.ones(3, (4, 4)))
    with pytest.raises(ValueError):
        masked.evaluate(np.zeros((5, 5)))


def test_mask_channel_mismatch_is_rejected(quadratic_model):
    with pytest.raises(ValueError):
        quadratic_model.with_mask(SpatialMask.ones(2, (4, 4)))


def test_mask_weights_below_epsilon_are_rejected():
    with pytest.raises(ValueError):
        SpatialMask(weights=np.zeros((1, 2, 2)))


def test_non_finite_input_is_rejected(quadratic_model):
    with pytest.raises(ValueError):
        quadratic_model.evaluate(np.full((3, 3), np.nan))


def test_average_mask_sums_channels():
    np.testing.assert_array_equal(average_mask(SpatialMask.ones(3, (4, 4))), np.full((4, 4), 3.0))


def test_constant_provider_gives_unit_mask(small_bank):
    mask = ConstantMaskProvider().make(np.zeros((5, 6)), small_bank, 0.01)
    assert mask.weights.shape == (3, 5, 6)
    assert np.all(mask.weights == 1.0)


def test_local_response_mask_at_flat_image(small_bank):
    mask = LocalResponseMaskProvider(gain=10.0, threshold=0.1).make(np.zeros((6, 6)), small_bank, 0.01)
    np.testing.assert_allclose(mask.weights, 0.01 + 0.99 * expit(1.0), rtol=1e-12)


def test_local_response_mask_drops_on_edges(small_bank):
    x = np.zeros((10, 10))
    x[:, 5:] = 1.0
    mask = LocalResponseMaskProvider(gain=50.0, threshold=0.05).make(x, small_bank, 0.01)
    assert mask.weights.min() >= 0.01
    assert mask.weights.max() <= 1.0
    assert average_mask(mask)[:, 4:6].mean() < average_mask(mask)[:, :2].mean()


@pytest.mark.parametrize("name", ["gain", "threshold"])
def test_mask_parameter_jacobians_match_finite_differences(rng, small_bank, name):
    x = 0.3 * rng.standard_normal((8, 8))
    provider = LocalResponseMaskProvider(gain=8.0, threshold=0.2)
    h = 1e-6
    value = provider.parameters()[name][0]
    upper = provider.with_parameters({name: np.array([value + h])}).make(x, small_bank, 0.01).weights
    lower = provider.with_parameters({name: np.array([value - h])}).make(x, small_bank, 0.01).weights
    analytic = provider.parameter_jacobians(x, small_bank, 0.01)[name]
    np.testing.assert_allclose((upper - lower) / (2 * h), analytic, atol=1e-6)


def test_offsets_must_match_channel_count(small_bank):
    provider = LocalResponseMaskProvider(offsets=np.zeros(2))
    with pytest.raises(ValueError):
        provider.make(np.zeros((4, 4)), small_bank, 0.01)


def test_file_mask_is_clamped_and_broadcast(tmp_path, small_bank):
    path = str(tmp_path / "mask.grf")
    values = np.linspace(-1.0, 2.0, 16).reshape(4, 4)
    write_grid(path, values)
    mask = FileMaskProvider(path).make(np.zeros((4, 4)), small_bank, 0.05)
    assert mask.weights.shape == (3, 4, 4)
    np.testing.assert_array_equal(mask.weights[0], np.clip(values, 0.05, 1.0))
    np.testing.assert_array_equal(mask.weights[2], mask.weights[0])


def test_file_mask_shape_mismatch_is_rejected(tmp_path, small_bank):
    path = str(tmp_path / "mask.grf")
    write_grid(path, np.ones((3, 3)))
    with pytest.raises(ValueError):
        FileMaskProvider(path).make(np.zeros((4, 4)), small_bank, 0.05)


def test_provider_factory():
    assert isinstance(MaskProviderFactory.create_provider("constant", {}), ConstantMaskProvider)
    provider = MaskProviderFactory.create_provider("local_response", {"gain": 3.0, "threshold": 0.2})
    assert provider.gain == 3.0 and provider.threshold == 0.2
    with pytest.raises(ValueError):
        MaskProviderFactory.create_provider("", {})
    with pytest.raises(ValueError):
        MaskProviderFactory.create_provider("file", {})
    with pytest.raises(ValueError):
        MaskProviderFactory.create_provider("learned", {})


def test_noise_scalings_must_match_channels(small_bank, quadratic_potential):
    with pytest.raises(ValueError):
        AdaptiveRegularizer(small_bank, quadratic_potential, [], sigma=0.1)


def _random_potential(rng, c_cvx):
    return SplinePotential.create(rng.uniform(size=100), rng.uniform(size=100), mu=rng.uniform(0.5, 2.0),
                                  c_cvx=c_cvx)


def test_masked_cost_dominates_epsilon_times_the_plain_cost(rng, small_bank):
    epsilon = 0.01
    for _ in range(100):
        model = build_regularizer(small_bank, _random_potential(rng, c_cvx=1), sigma=rng.uniform(0.01, 0.1))
        x = 0.3 * rng.standard_normal((8, 8))
        mask = SpatialMask(weights=rng.uniform(epsilon, 1.0, size=(3, 8, 8)), epsilon=epsilon)
        plain = model.evaluate(x)
        assert plain >= -1e-12
        assert model.with_mask(mask).evaluate(x) >= epsilon * plain - 1e-12 * max(1.0, plain)


def test_cost_grows_with_the_mask(rng, small_bank):
    model = build_regularizer(small_bank, _random_potential(rng, c_cvx=1), sigma=0.05)
    for _ in range(20):
        x = 0.3 * rng.standard_normal((8, 8))
        lower = rng.uniform(0.01, 1.0, size=(3, 8, 8))
        upper = lower + rng.uniform(size=lower.shape) * (1.0 - lower)
        low_cost = model.with_mask(SpatialMask(weights=lower, epsilon=0.01)).evaluate(x)
        high_cost = model.with_mask(SpatialMask(weights=upper, epsilon=0.01)).evaluate(x)
        assert low_cost <= high_cost + 1e-12


def test_convex_model_is_midpoint_convex(rng, small_bank):
    for _ in range(20):
        model = build_regularizer(small_bank, _random_potential(rng, c_cvx=0), sigma=0.05)
        mask = SpatialMask(weights=rng.uniform(0.01, 1.0, size=(3, 8, 8)), epsilon=0.01)
        masked = model.with_mask(mask)
        x = 0.3 * rng.standard_normal((8, 8))
        z = 0.3 * rng.standard_normal((8, 8))
        for candidate in (model, masked):
            midpoint = candidate.evaluate(0.5 * (x + z))
            assert midpoint <= 0.5 * (candidate.evaluate(x) + candidate.evaluate(z)) + 1e-12


def test_lipschitz_bound_covers_the_exact_channel_norms(small_bank, quadratic_model, dense_gram):
    exact = sum(np.linalg.norm(small_bank.channel_matrix(c, (8, 8)), 2) ** 2 for c in range(small_bank.n_channels))
    bound = quadratic_model.lipschitz_gradient_bound((8, 8))
    assert exact <= bound <= 1.02 * exact
    assert np.linalg.norm(dense_gram(small_bank, (8, 8)), 2) <= bound
