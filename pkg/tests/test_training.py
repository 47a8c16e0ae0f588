import numpy as np
import pytest

from core.config import TrainSection
from fidelity.scaled_quadratic import ScaledQuadraticFidelity
from filters.filter_bank import FilterBank, dirac_kernel
from operators.identity import IdentityOperator
from potentials.spline_potential import SplinePotential
from regularizer.adaptive_regularizer import build_regularizer, unit_alpha_regularizer
from regularizer.mask import ConstantMaskProvider, LocalResponseMaskProvider, make_mask
from solver.agd import agd_minimize
from solver.pipeline import denoising_problem, prox_denoise, solve_stage_two
from training.adam import Adam
from training.implicit_gradient import implicit_gradient
from training.mask_finetuner import MaskFinetuner
from training.model_init import default_model
from training.parameters import model_parameters, trainable_groups, with_model_parameters
from training.patches import extract_patches, load_images
from training.trainer import DenoiserTrainer, lr_schedule
from util.grid_io import write_grid
from util.metrics import psnr

LAM = 1.0


def _solve(model, y, lam=LAM):
    return agd_minimize(denoising_problem(model, y, lam), tol=1e-11, max_iters=20000).x_hat


def _quadratic_loss(x_hat, target):
    return 0.5 * float(np.sum((x_hat - target) ** 2))


def _piecewise_constant_phantom(rng, size):
    image = np.full((size, size), rng.uniform(0.2, 0.8))
    for _ in range(6):
        top, left = rng.integers(0, size - 8, size=2)
        height, width = rng.integers(size // 8, size // 2, size=2)
        image[top:top + height, left:left + width] = rng.uniform()
    return image


def _short_run_config(**changes):
    params = dict(patch_size=6, n_patches=6, epochs=2, batch_size=3, fixed_sigma=0.1, val_sigma=0.1,
                  val_fraction=0.34, prox_tol=1e-5, prox_max_iters=300)
    params.update(changes)
    return TrainSection(**params)


@pytest.fixture
def trainable_model(rng, small_bank):
    potential = SplinePotential.create(rng.uniform(0.2, 0.8, size=100))
    return build_regularizer(small_bank, potential, sigma=0.1)


def test_scalar_log_mu_gradient_matches_closed_form():
    mu, y, target = 2.0, 0.7, 0.1
    potential = SplinePotential.create(mu=mu, knot_count=101, spacing=1.0)
    model = unit_alpha_regularizer(FilterBank(dirac_kernel(1)), potential)
    x_hat = y / (1.0 + LAM * mu)
    grads = implicit_gradient(model, np.array([[y]]), np.array([[x_hat]]), np.array([[x_hat - target]]),
                              lam=LAM, groups=("log_mu",))
    expected = -(x_hat - target) * LAM * mu * y / (1.0 + LAM * mu) ** 2
    assert grads["log_mu"][0] == pytest.approx(expected, abs=1e-8)
    assert grads.cg_converged and not grads.indefinite


def test_log_mu_gradient_matches_finite_differences(rng, trainable_model):
    y = rng.uniform(size=(6, 6))
    target = rng.uniform(size=(6, 6))
    x_hat = _solve(trainable_model, y)
    grads = implicit_gradient(trainable_model, y, x_hat, x_hat - target, lam=LAM, groups=("log_mu",))
    h = 1e-5
    log_mu = model_parameters(trainable_model)["log_mu"][0]
    upper = _quadratic_loss(_solve(with_model_parameters(trainable_model, {"log_mu": [log_mu + h]}), y), target)
    lower = _quadratic_loss(_solve(with_model_parameters(trainable_model, {"log_mu": [log_mu - h]}), y), target)
    assert (upper - lower) / (2 * h) == pytest.approx(grads["log_mu"][0], rel=1e-3, abs=1e-9)


def test_spline_gradient_matches_finite_differences(rng, trainable_model):
    y = rng.uniform(size=(6, 6))
    target = rng.uniform(size=(6, 6))
    x_hat = _solve(trainable_model, y)
    grads = implicit_gradient(trainable_model, y, x_hat, x_hat - target, lam=LAM, groups=("psi_plus",))
    direction = rng.standard_normal(100)
    plus = trainable_model.potential.second_derivs_plus
    h = 1e-5
    upper = _quadratic_loss(_solve(with_model_parameters(trainable_model, {"psi_plus": plus + h * direction}), y),
                            target)
    lower = _quadratic_loss(_solve(with_model_parameters(trainable_model, {"psi_plus": plus - h * direction}), y),
                            target)
    assert (upper - lower) / (2 * h) == pytest.approx(grads["psi_plus"] @ direction, rel=1e-3, abs=1e-9)


@pytest.mark.parametrize("group", ["gain", "threshold", "offsets"])
def test_mask_gradients_match_finite_differences(rng, small_bank, group):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    op = IdentityOperator((6, 6))
    fidelity = ScaledQuadraticFidelity()
    y = rng.uniform(size=(6, 6))
    target = rng.uniform(size=(6, 6))
    x_est = _solve(model, y)
    provider = LocalResponseMaskProvider(gain=5.0, threshold=0.05, offsets=np.array([0.01, -0.02, 0.03]))

    def stage_two(candidate):
        mask = make_mask(candidate, x_est, small_bank)
        masked = model.with_mask(mask)
        return masked, solve_stage_two(y, op, fidelity, masked, LAM, x_est, tol=1e-11, max_iters=20000).x_hat

    masked, x_hat = stage_two(provider)
    grads = implicit_gradient(masked, y, x_hat, x_hat - target, lam=LAM, groups=(group,), provider=provider,
                              x_est=x_est)
    value = provider.parameters()[group]
    direction = rng.standard_normal(value.shape)
    h = 1e-5
    upper = _quadratic_loss(stage_two(provider.with_parameters({group: value + h * direction}))[1], target)
    lower = _quadratic_loss(stage_two(provider.with_parameters({group: value - h * direction}))[1], target)
    assert (upper - lower) / (2 * h) == pytest.approx(grads[group] @ direction, rel=1e-3, abs=1e-9)


def test_psi_minus_gradient_matches_finite_differences(rng, small_bank):
    potential = SplinePotential.create(rng.uniform(0.2, 0.8, size=100), rng.uniform(0.05, 0.6, size=100), c_cvx=1)
    model = build_regularizer(small_bank, potential, sigma=0.1)
    y = rng.uniform(size=(6, 6))
    target = rng.uniform(size=(6, 6))
    x_hat = _solve(model, y)
    grads = implicit_gradient(model, y, x_hat, x_hat - target, lam=LAM, groups=("psi_minus",))
    direction = rng.standard_normal(100)
    minus = potential.second_derivs_minus
    h = 1e-5
    upper = _quadratic_loss(_solve(with_model_parameters(model, {"psi_minus": minus + h * direction}), y), target)
    lower = _quadratic_loss(_solve(with_model_parameters(model, {"psi_minus": minus - h * direction}), y), target)
    assert (upper - lower) / (2 * h) == pytest.approx(grads["psi_minus"] @ direction, rel=1e-3, abs=1e-9)


def test_scaling_gradient_matches_finite_differences(rng, trainable_model):
    y = rng.uniform(size=(6, 6))
    target = rng.uniform(size=(6, 6))
    x_hat = _solve(trainable_model, y)
    grads = implicit_gradient(trainable_model, y, x_hat, x_hat - target, lam=LAM, groups=("scaling",))
    scaling = model_parameters(trainable_model)["scaling"]
    direction = rng.standard_normal(scaling.shape)
    h = 1e-5
    upper = _quadratic_loss(_solve(with_model_parameters(trainable_model, {"scaling": scaling + h * direction}), y),
                            target)
    lower = _quadratic_loss(_solve(with_model_parameters(trainable_model, {"scaling": scaling - h * direction}), y),
                            target)
    assert (upper - lower) / (2 * h) == pytest.approx(np.sum(grads["scaling"] * direction), rel=1e-3, abs=1e-9)


def test_mask_gradients_need_the_provider(rng, trainable_model):
    x = rng.uniform(size=(4, 4))
    with pytest.raises(ValueError):
        implicit_gradient(trainable_model, x, x, x, groups=("gain",))


def test_adam_leaves_frozen_groups_untouched():
    params = {"log_mu": np.array([0.3]), "scaling": np.array([1.0, 2.0])}
    updated = Adam({"log_mu": 0.0, "scaling": 0.1}).step(params, {"log_mu": np.array([5.0]),
                                                                 "scaling": np.array([2.0, -3.0])})
    assert updated["log_mu"] is params["log_mu"]
    np.testing.assert_allclose(updated["scaling"], [0.9, 2.1], rtol=1e-6)


def test_parameter_round_trip(trainable_model):
    params = model_parameters(trainable_model)
    params["log_mu"] = np.array([np.log(1.7)])
    updated = with_model_parameters(trainable_model, params)
    assert updated.potential.mu == pytest.approx(1.7)
    np.testing.assert_array_equal(updated.potential.second_derivs_plus, trainable_model.potential.second_derivs_plus)


def test_spline_updates_are_projected(trainable_model):
    updated = with_model_parameters(trainable_model, {"psi_plus": np.linspace(-1.0, 2.0, 100)})
    assert updated.potential.second_derivs_plus.min() == 0.0
    assert updated.potential.second_derivs_plus.max() == 1.0


def test_trainable_groups(small_bank):
    convex = build_regularizer(small_bank, SplinePotential.create())
    weakly = build_regularizer(small_bank, SplinePotential.create(c_cvx=1))
    assert trainable_groups(convex) == ("psi_plus", "log_mu", "scaling")
    assert trainable_groups(weakly) == ("psi_plus", "psi_minus", "log_mu", "scaling")
    assert trainable_groups(weakly, train_spline=False) == ("log_mu", "scaling")


def test_extract_patches(rng):
    images = [rng.uniform(size=(10, 10)), rng.uniform(size=(3, 3))]
    patches = extract_patches(images, 4, 5, seed=1)
    assert patches.shape == (5, 4, 4)
    np.testing.assert_array_equal(patches, extract_patches(images, 4, 5, seed=1))
    with pytest.raises(ValueError):
        extract_patches([rng.uniform(size=(3, 3))], 4, 2)


def test_load_images_reads_grids_in_name_order(tmp_path):
    write_grid(str(tmp_path / "b.grf"), np.full((3, 3), 2.0))
    write_grid(str(tmp_path / "a.grf"), np.full((3, 3), 1.0))
    (tmp_path / "notes.txt").write_text("ignored")
    images = load_images(str(tmp_path))
    assert [img[0, 0] for img in images] == [1.0, 2.0]
    with pytest.raises(FileNotFoundError):
        load_images(str(tmp_path / "missing"))


def test_lr_schedule():
    config = TrainSection(lr_decay_epochs=4)
    assert [lr_schedule(config, e) for e in (0, 2, 4, 10)] == [1.0, 0.75, 0.5, 0.5]
    assert lr_schedule(TrainSection(), 7) == 1.0


def test_default_model_has_unit_norm_filters():
    model = default_model(n_channels=4, kernel_size=3)
    assert model.n_channels == 4
    np.testing.assert_allclose(model.bank.channel_norms((32, 32)), 1.0, rtol=1e-4)
    assert model.potential.c_cvx == 0


def test_short_training_run_keeps_the_best_epoch(rng, small_bank):
    config = _short_run_config()
    images = [rng.uniform(size=(12, 12))]
    patches = extract_patches(images, config.patch_size, config.n_patches, seed=0)
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    result = DenoiserTrainer(config).train(model, patches)
    assert len(result.loss_trace) == 2
    assert len(result.val_trace) == 3
    assert result.val_trace[result.best_epoch] == min(result.val_trace)
    assert np.all(np.isfinite(result.loss_trace))


def test_identical_seeds_give_identical_traces(rng, small_bank):
    config = _short_run_config(sigma_min=0.05, sigma_max=0.1, fixed_sigma=None)
    patches = extract_patches([rng.uniform(size=(12, 12))], config.patch_size, config.n_patches, seed=0)
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    first = DenoiserTrainer(config).train(model, patches)
    second = DenoiserTrainer(config).train(model, patches)
    assert first.loss_trace == second.loss_trace
    assert first.val_trace == second.val_trace
    for name, value in model_parameters(first.model).items():
        np.testing.assert_array_equal(value, model_parameters(second.model)[name])


def test_zero_learning_rates_leave_the_model_unchanged(rng, small_bank):
    config = _short_run_config(lr_mu=0.0, lr_scaling=0.0, lr_spline=0.0)
    patches = extract_patches([rng.uniform(size=(12, 12))], config.patch_size, config.n_patches, seed=0)
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    result = DenoiserTrainer(config).train(model, patches)
    for name, value in model_parameters(model).items():
        np.testing.assert_array_equal(model_parameters(result.model)[name], value)
    assert result.loss_trace[0] == result.loss_trace[1]
    assert len(set(result.val_trace)) == 1


def test_mask_finetuning_smoke(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.1)
    clean = np.zeros((8, 8))
    clean[:, 4:] = 1.0
    tasks = [(clean + 0.1 * rng.standard_normal(clean.shape), clean)]
    config = TrainSection(epochs=2, prox_tol=1e-6, prox_max_iters=500)
    finetuner = MaskFinetuner(model, IdentityOperator((8, 8)), ScaledQuadraticFidelity(), LAM, 0.1, config)
    initial = LocalResponseMaskProvider()
    result = finetuner.finetune(initial, tasks)
    assert len(result.loss_trace) == 3
    assert result.provider.offsets.shape == (3,)
    assert np.all(np.isfinite(result.loss_trace))
    assert finetuner.evaluate(initial, tasks) == result.loss_trace[0]
    assert finetuner.evaluate(result.provider, tasks) <= result.loss_trace[0]
    with pytest.raises(ValueError):
        finetuner.finetune(ConstantMaskProvider(), tasks)
    with pytest.raises(ValueError):
        finetuner.finetune(LocalResponseMaskProvider(), [])


def test_finetuning_improves_a_phantom_task(rng, small_bank):
    model = build_regularizer(small_bank, SplinePotential.create(), sigma=0.05)
    tasks = []
    for _ in range(2):
        clean = _piecewise_constant_phantom(rng, 16)
        tasks.append((clean + 0.05 * rng.standard_normal(clean.shape), clean))
    config = TrainSection(epochs=4, prox_tol=1e-7, prox_max_iters=2000, lr_mask=0.02)
    finetuner = MaskFinetuner(model, IdentityOperator((16, 16)), ScaledQuadraticFidelity(), 2.0, 0.05, config)
    initial = LocalResponseMaskProvider(gain=10.0, threshold=0.2)
    result = finetuner.finetune(initial, tasks)
    assert result.provider.gain >= 0.0
    assert finetuner.evaluate(result.provider, tasks) <= finetuner.evaluate(initial, tasks)


@pytest.mark.slow
def test_toy_training_beats_the_noisy_input_by_three_db():
    rng = np.random.default_rng(7)
    sigma = 25.0 / 255.0
    images = [_piecewise_constant_phantom(rng, 96) for _ in range(8)]
    config = TrainSection(patch_size=40, n_patches=2000, epochs=1, batch_size=32, fixed_sigma=sigma, val_sigma=sigma,
                          val_fraction=0.05, prox_tol=1e-4, prox_max_iters=300)
    patches = extract_patches(images, config.patch_size, config.n_patches, seed=0)
    result = DenoiserTrainer(config).train(default_model(n_channels=8, kernel_size=5, sigma=sigma), patches)
    held_out = _piecewise_constant_phantom(rng, 64)
    noisy = held_out + sigma * rng.standard_normal(held_out.shape)
    denoised = prox_denoise(result.model, noisy, sigma, 1.0, tol=1e-6, max_iters=2000).x_hat
    assert psnr(denoised, held_out) >= psnr(noisy, held_out) + 3.0
