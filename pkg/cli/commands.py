import argparse
import logging
import os
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cnst.mask_kind import MaskKind
from cnst.operator_kind import OperatorKind
from core.config import AppConfig, load_app_config
from core.errors import ConfigError
from core.logging_config import setup_logging
from fidelity.fidelity_factory import FidelityFactory
from fidelity.noise import NoiseSpec, simulate_data
from lab.coercivity import gibbs_coercivity, prior_normalizability_check
from lab.hoffman import PolyhedralSystem, hoffman_constant, hoffman_distance_check
from lab.lipschitz import SolutionMapProbe, empirical_mask_sensitivity, empirical_solution_map_lipschitz
from lab.rates import RateExperiment, geometric_deltas, vanishing_noise_rates
from operators.identity import IdentityOperator
from operators.linear_operator import LinearOperator
from operators.operator_factory import OperatorFactory
from regularizer.adaptive_regularizer import AdaptiveRegularizer
from regularizer.mask import LocalResponseMaskProvider, MaskProvider, MaskProviderFactory
from solver.pipeline import prox_denoise, reconstruct_adaptive
from training.mask_finetuner import finetune_mask_provider
from training.model_init import default_model
from training.patches import extract_patches, load_images
from training.trainer import train_denoiser
from util.checkpoint import load_checkpoint, save_checkpoint
from util.grid_io import read_image, write_grid
from util.metrics import psnr, ssim
from util.report import write_report

logger = logging.getLogger(__name__)

REQUIRED_KEYS: Dict[str, Tuple[str, ...]] = {
    "denoise": ("problem.lam",),
    "reconstruct": ("problem.operator", "problem.fidelity", "problem.lam", "problem.sigma"),
    "train": ("train.patch_size", "train.n_patches", "train.epochs"),
    "finetune-mask": ("problem.operator", "problem.lam", "problem.sigma", "mask.kind"),
    "analyze": (),
    "simulate": ("problem.operator", "problem.noise"),
}

ANALYSES = ("hoffman", "lipschitz", "rates", "coercivity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-ridge",
                                     description="Data-adaptive ridge regularizers for image reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    denoise = sub.add_parser("denoise", help="Proximal denoising with a trained model")
    denoise.add_argument("--config", required=True)
    denoise.add_argument("--input", required=True)
    denoise.add_argument("--sigma", type=float, required=True)
    denoise.add_argument("--output", required=True)

    reconstruct = sub.add_parser("reconstruct", help="Two-stage adaptive reconstruction")
    reconstruct.add_argument("--config", required=True)
    reconstruct.add_argument("--data", required=True)
    reconstruct.add_argument("--output", required=True)
    reconstruct.add_argument("--mask-out", dest="mask_out")

    train = sub.add_parser("train", help="Train the denoiser on image patches")
    train.add_argument("--config", required=True)
    train.add_argument("--data-dir", dest="data_dir", required=True)
    train.add_argument("--checkpoint-out", dest="checkpoint_out", required=True)

    finetune = sub.add_parser("finetune-mask", help="Fit the local-response mask provider")
    finetune.add_argument("--config", required=True)
    finetune.add_argument("--checkpoint", required=True)
    finetune.add_argument("--data-dir", dest="data_dir", required=True)
    finetune.add_argument("--checkpoint-out", dest="checkpoint_out")

    analyze = sub.add_parser("analyze", help="Stability lab experiments")
    analyze.add_argument("analysis", choices=ANALYSES)
    analyze.add_argument("--config", required=True)
    analyze.add_argument("--report", required=True)

    metrics = sub.add_parser("metrics", help="PSNR and SSIM of two images")
    metrics.add_argument("--a", required=True)
    metrics.add_argument("--b", required=True)

    simulate = sub.add_parser("simulate", help="Simulate measurements from a ground truth")
    simulate.add_argument("--config", required=True)
    simulate.add_argument("--truth", required=True)
    simulate.add_argument("--output", required=True)
    simulate.add_argument("--seed", type=int)
    return parser


def _read_input(path: str) -> np.ndarray:
    if not os.path.exists(path):
        raise ConfigError(f"Input file not found: {path}", key=path)
    return read_image(path)


def load_model(config: AppConfig) -> Tuple[AdaptiveRegularizer, Optional[LocalResponseMaskProvider]]:
    section = config.regularizer
    if section.checkpoint:
        if not os.path.exists(section.checkpoint):
            raise ConfigError(f"Checkpoint not found: {section.checkpoint}", key="regularizer.checkpoint")
        return load_checkpoint(section.checkpoint, config.problem.sigma)
    logger.warning("No regularizer.checkpoint configured; using the untrained default model")
    return default_model(section.n_channels, section.kernel_size, section.knot_count, section.spacing,
                         section.c_cvx, section.mu, config.problem.sigma), None


def image_shape(config: AppConfig, data_shape: Tuple[int, ...], identity: bool) -> Tuple[int, int]:
    problem = config.problem
    if problem.image_height and problem.image_width:
        return int(problem.image_height), int(problem.image_width)
    if identity and len(data_shape) == 2:
        return int(data_shape[0]), int(data_shape[1])
    raise ConfigError("problem.image_height and problem.image_width are required for this operator",
                      key="problem.image_height")


def build_operator(config: AppConfig, shape: Tuple[int, int]) -> LinearOperator:
    problem = config.problem
    return OperatorFactory.create_operator(problem.operator, shape, problem.model_dump())


def build_provider(config: AppConfig, checkpoint_provider: Optional[LocalResponseMaskProvider]) -> MaskProvider:
    if checkpoint_provider is not None and config.mask.kind == MaskKind.LOCAL_RESPONSE.value:
        return checkpoint_provider
    return MaskProviderFactory.create_provider(config.mask.kind, config.mask.model_dump())


def run_denoise(args: argparse.Namespace, config: AppConfig) -> None:
    y = _read_input(args.input)
    model, _ = load_model(config)
    result = prox_denoise(model, y, args.sigma, config.problem.lam, tol=config.solver.tol,
                          max_iters=config.solver.max_iters)
    write_grid(args.output, result.x_hat)
    logger.info(f"Denoised {args.input} in {result.iterations} iterations ({result.runtime_seconds:.2f}s)")


def run_reconstruct(args: argparse.Namespace, config: AppConfig) -> None:
    y = _read_input(args.data)
    problem = config.problem
    identity = problem.operator == OperatorKind.IDENTITY.value
    operator_h = build_operator(config, image_shape(config, y.shape, identity))
    fidelity = FidelityFactory.create_fidelity(problem.fidelity, problem.model_dump())
    model, checkpoint_provider = load_model(config)
    provider = build_provider(config, checkpoint_provider)
    result = reconstruct_adaptive(y, operator_h, fidelity, model, problem.lam, problem.sigma, provider,
                                  tol=config.solver.tol, max_iters=config.solver.max_iters,
                                  epsilon=config.regularizer.epsilon)
    write_grid(args.output, result.x_hat)
    if args.mask_out:
        write_grid(args.mask_out, result.mask.weights)
    runtime = result.stage1.runtime_seconds + result.stage2.runtime_seconds
    logger.info(f"Reconstructed {args.data} in {runtime:.2f}s")


def run_train(args: argparse.Namespace, config: AppConfig) -> None:
    images = load_images(args.data_dir)
    if not images:
        raise ConfigError(f"No training images in {args.data_dir}", key=args.data_dir)
    section = config.train
    patches = extract_patches(images, section.patch_size, section.n_patches, section.seed)
    model, _ = load_model(config)
    result = train_denoiser(model, patches, section, lam=config.problem.lam)
    save_checkpoint(args.checkpoint_out, result.model)
    logger.info(f"Training finished; best epoch {result.best_epoch}")


def run_finetune(args: argparse.Namespace, config: AppConfig) -> None:
    if not os.path.exists(args.checkpoint):
        raise ConfigError(f"Checkpoint not found: {args.checkpoint}", key=args.checkpoint)
    problem = config.problem
    model, checkpoint_provider = load_checkpoint(args.checkpoint, problem.sigma)
    provider = build_provider(config, checkpoint_provider)
    if not isinstance(provider, LocalResponseMaskProvider):
        raise ConfigError("Mask finetuning needs mask.kind = local_response", key="mask.kind")
    images = load_images(args.data_dir)
    if not images:
        raise ConfigError(f"No task images in {args.data_dir}", key=args.data_dir)
    identity = problem.operator == OperatorKind.IDENTITY.value
    operator_h = build_operator(config, image_shape(config, images[0].shape, identity))
    fidelity = FidelityFactory.create_fidelity(problem.fidelity, problem.model_dump())
    noise = NoiseSpec.from_dict(problem.model_dump())
    tasks = [(simulate_data(operator_h, image, noise, problem.seed + k), image)
             for k, image in enumerate(images) if image.shape == tuple(operator_h.shape_in)]
    result = finetune_mask_provider(model, provider, tasks, operator_h, fidelity, problem.lam, problem.sigma,
                                    config.train)
    save_checkpoint(args.checkpoint_out or args.checkpoint, model, result.provider)


def _random_system(rng: np.random.Generator, n_vars: int, n_eq: int, n_ineq: int) -> PolyhedralSystem:
    E = rng.standard_normal((n_eq, n_vars))
    F = rng.standard_normal((n_ineq, n_vars))
    anchor = rng.standard_normal(n_vars)
    return PolyhedralSystem(E=E, F=F, b=E @ anchor, q=F @ anchor + np.abs(rng.standard_normal(n_ineq)))


def analyze_hoffman(config: AppConfig) -> Dict[str, object]:
    lab = config.lab
    rng = np.random.default_rng(lab.seed)
    constants: List[float] = []
    worst = 0.0
    violations = 0
    for _ in range(lab.n_systems):
        system = _random_system(rng, lab.n_vars, lab.n_eq, lab.n_ineq)
        constant = hoffman_constant(system.E, system.F)
        constants.append(constant)
        for _ in range(lab.n_probes):
            bound, distance = hoffman_distance_check(system, 3.0 * rng.standard_normal(lab.n_vars), constant)
            if distance > bound * (1.0 + 1e-8) + 1e-12:
                violations += 1
            if bound > 0:
                worst = max(worst, distance / bound)
    return {"systems": lab.n_systems, "probes": lab.n_systems * lab.n_probes, "violations": violations,
            "max_distance_over_bound": worst, "min_constant": min(constants), "max_constant": max(constants)}


def _convex_model(config: AppConfig) -> AdaptiveRegularizer:
    model, _ = load_model(config)
    if model.potential.c_cvx != 0:
        raise ConfigError("This analysis needs a convex model (c_cvx = 0)", key="regularizer.c_cvx")
    return model


def _lab_image(config: AppConfig) -> np.ndarray:
    lab = config.lab
    rng = np.random.default_rng(lab.seed)
    rows = np.linspace(0.0, 1.0, lab.grid_height)[:, None]
    cols = np.linspace(0.0, 1.0, lab.grid_width)[None, :]
    return 0.5 + 0.3 * np.sin(3.0 * rows + 2.0 * cols) + 0.05 * rng.standard_normal((lab.grid_height,
                                                                                     lab.grid_width))


def analyze_lipschitz(config: AppConfig) -> Dict[str, object]:
    lab = config.lab
    model = _convex_model(config)
    y = _lab_image(config)
    probe = SolutionMapProbe(model, IdentityOperator(y.shape), y, lam=config.problem.lam)
    ratio, bound = empirical_solution_map_lipschitz(probe, lab.n_pairs, lab.radius, lab.seed)
    mask_ratio, mask_bound = empirical_mask_sensitivity(probe, lab.n_pairs, lab.radius, lab.seed)
    return {"pairs": lab.n_pairs, "max_ratio": ratio, "bound": bound, "holds": ratio <= bound * (1.0 + 1e-3),
            "mask_max_ratio": mask_ratio, "mask_bound": mask_bound, "mask_holds": mask_ratio <= mask_bound}


def analyze_rates(config: AppConfig) -> Dict[str, object]:
    lab = config.lab
    model = _convex_model(config)
    x_true = _lab_image(config)
    experiment = RateExperiment(regularizer=model, operator=IdentityOperator(x_true.shape), x_true=x_true,
                                deltas=geometric_deltas(lab.delta_max, lab.delta_min, lab.n_deltas),
                                rate_c=lab.rate_c, seeds=tuple(range(lab.rate_seeds)))
    result = vanishing_noise_rates(experiment)
    return {"slope": result.slope, "degenerate": result.degenerate, "deltas": result.deltas,
            "lambdas": result.lambdas, "mean_errors": result.errors.mean(axis=0)}


def analyze_coercivity(config: AppConfig) -> Dict[str, object]:
    lab = config.lab
    model, _ = load_model(config)
    grid = (lab.coercivity_height, lab.coercivity_width)
    coercivity = gibbs_coercivity(model.bank, grid, lab.seed)
    check = prior_normalizability_check(model, coercivity.gamma, grid, lam=config.problem.lam,
                                        epsilon=config.regularizer.epsilon)
    report = {"gamma": coercivity.gamma, "exact": coercivity.exact, "normalizable": check.normalizable,
              "log_bound": check.log_bound, "a": check.a, "b": check.b}
    report.update({f"witness_{key}": value for key, value in check.witness.items()})
    return report


ANALYZERS: Dict[str, Callable[[AppConfig], Dict[str, object]]] = {
    "hoffman": analyze_hoffman,
    "lipschitz": analyze_lipschitz,
    "rates": analyze_rates,
    "coercivity": analyze_coercivity,
}


def run_analyze(args: argparse.Namespace, config: AppConfig) -> None:
    report = ANALYZERS[args.analysis](config)
    write_report(args.report, report)


def run_metrics(args: argparse.Namespace) -> str:
    a = _read_input(args.a)
    b = _read_input(args.b)
    line = f"psnr={psnr(a, b)} ssim={ssim(a, b)}"
    print(line)
    return line


def run_simulate(args: argparse.Namespace, config: AppConfig) -> None:
    x_true = _read_input(args.truth)
    problem = config.problem
    operator_h = build_operator(config, x_true.shape)
    seed = problem.seed if args.seed is None else args.seed
    y = simulate_data(operator_h, x_true, NoiseSpec.from_dict(problem.model_dump()), seed)
    write_grid(args.output, y)
    logger.info(f"Simulated {problem.operator} data of shape {y.shape} with seed {seed}")


COMMANDS: Dict[str, Callable[[argparse.Namespace, AppConfig], None]] = {
    "denoise": run_denoise,
    "reconstruct": run_reconstruct,
    "train": run_train,
    "finetune-mask": run_finetune,
    "analyze": run_analyze,
    "simulate": run_simulate,
}


def dispatch(args: argparse.Namespace) -> None:
    if args.command == "metrics":
        run_metrics(args)
        return
    config = load_app_config(args.config, REQUIRED_KEYS[args.command])
    setup_logging(console_level=getattr(logging, config.logging.level.upper(), logging.INFO),
                  file_level=logging.DEBUG, log_directory=config.logging.directory)
    COMMANDS[args.command](args, config)


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)
