import logging
import os
from typing import Any, Dict, Iterable, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from cnst import defaults
from cnst.fidelity_kind import FidelityKind, NoiseKind
from cnst.mask_kind import MaskKind
from cnst.operator_kind import OperatorKind
from core.errors import ConfigError

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(_Section):
    operator: str = OperatorKind.IDENTITY.value
    image_height: Optional[int] = None
    image_width: Optional[int] = None
    blur_kernel_size: int = defaults.BLUR_KERNEL_SIZE
    blur_std: float = defaults.BLUR_STD
    stride: int = defaults.BLUR_STRIDE
    acceleration: int = defaults.MRI_ACCELERATION
    center_fraction: float = defaults.MRI_CENTER_FRACTION
    mask_seed: int = 0
    n_angles: int = 60
    n_detectors: Optional[int] = None
    limited_angle_fraction: float = 0.0
    pixel_size: Optional[float] = None
    fidelity: str = FidelityKind.SCALED_QUADRATIC.value
    fidelity_sigma: float = 1.0
    n0: float = defaults.CT_PHOTON_COUNT
    mu_ct: float = defaults.CT_ATTENUATION
    t_floor: float = 0.0
    noise: str = NoiseKind.GAUSSIAN.value
    noise_sigma: float = 0.0
    lam: float = 1.0
    sigma: float = 25.0 / 255.0
    seed: int = 0

    @field_validator("operator")
    @classmethod
    def _known_operator(cls, v: str) -> str:
        return OperatorKind.from_value(v).value

    @field_validator("fidelity")
    @classmethod
    def _known_fidelity(cls, v: str) -> str:
        return FidelityKind.from_value(v).value

    @field_validator("noise")
    @classmethod
    def _known_noise(cls, v: str) -> str:
        return NoiseKind.from_value(v).value

    @field_validator("lam", "fidelity_sigma", "n0", "mu_ct", "blur_std")
    @classmethod
    def _positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @field_validator("sigma")
    @classmethod
    def _sigma_range(cls, v: float) -> float:
        if not 0.0 <= v <= defaults.SIGMA_MAX:
            raise ValueError(f"must lie in [0, {defaults.SIGMA_MAX}]")
        return v

    @field_validator("limited_angle_fraction", "center_fraction")
    @classmethod
    def _fraction(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError("must lie in [0, 1)")
        return v


class RegularizerSection(_Section):
    checkpoint: Optional[str] = None
    n_channels: int = 8
    kernel_size: int = 5
    knot_count: int = defaults.KNOT_COUNT
    spacing: float = defaults.KNOT_SPACING
    c_cvx: int = 0
    mu: float = 1.0
    epsilon: float = defaults.MASK_EPSILON

    @field_validator("c_cvx")
    @classmethod
    def _cvx_mode(cls, v: int) -> int:
        if v not in (0, 1):
            raise ValueError("must be 0 (convex) or 1 (weakly convex)")
        return v

    @field_validator("kernel_size")
    @classmethod
    def _odd(cls, v: int) -> int:
        if v < 1 or v % 2 == 0:
            raise ValueError("must be a positive odd integer")
        return v

    @field_validator("epsilon")
    @classmethod
    def _epsilon(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("must lie in (0, 1)")
        return v


class SolverSection(_Section):
    tol: float = defaults.SOLVER_TOL
    max_iters: int = defaults.SOLVER_MAX_ITERS


class MaskSection(_Section):
    kind: str = MaskKind.CONSTANT.value
    gain: float = 10.0
    threshold: float = 0.1
    smoothing_width: int = 3
    path: Optional[str] = None

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, v: str) -> str:
        return MaskKind.from_value(v).value


class TrainSection(_Section):
    patch_size: int = 40
    n_patches: int = 2000
    sigma_min: float = 0.0
    sigma_max: float = defaults.SIGMA_MAX
    fixed_sigma: Optional[float] = None
    batch_size: int = 8
    epochs: int = 5
    seed: int = 0
    lr_mu: float = 5e-2
    lr_scaling: float = 5e-3
    lr_spline: float = 1e-3
    lr_mask: float = 5e-2
    lr_decay_epochs: int = 0
    val_fraction: float = 0.1
    val_sigma: float = 25.0 / 255.0
    train_spline: bool = True
    prox_tol: float = 1e-6
    prox_max_iters: int = 500

    @field_validator("lr_mu", "lr_scaling", "lr_spline", "lr_mask")
    @classmethod
    def _rate(cls, v: float) -> float:
        if v < 0:
            raise ValueError("learning rates must be non-negative")
        return v

    @model_validator(mode="after")
    def _sigma_range(self) -> 'TrainSection':
        if not 0.0 <= self.sigma_min <= self.sigma_max <= defaults.SIGMA_MAX + 1e-12:
            raise ValueError(f"sigma range must lie within [0, {defaults.SIGMA_MAX}]")
        if self.fixed_sigma is not None and not 0.0 <= self.fixed_sigma <= defaults.SIGMA_MAX + 1e-12:
            raise ValueError(f"fixed_sigma must lie within [0, {defaults.SIGMA_MAX}]")
        return self


class LabSection(_Section):
    seed: int = 0
    n_systems: int = 25
    n_vars: int = 3
    n_eq: int = 1
    n_ineq: int = 4
    n_probes: int = 50
    n_pairs: int = 50
    radius: float = 0.05
    grid_height: int = 8
    grid_width: int = 8
    delta_max: float = 1e-1
    delta_min: float = 1e-4
    n_deltas: int = 7
    rate_c: float = 1.0
    rate_seeds: int = 5
    coercivity_height: int = 2
    coercivity_width: int = 2


class LoggingSection(_Section):
    directory: Optional[str] = None
    level: str = "INFO"


class AppConfig(_Section):
    problem: ProblemSection = ProblemSection()
    regularizer: RegularizerSection = RegularizerSection()
    solver: SolverSection = SolverSection()
    mask: MaskSection = MaskSection()
    train: TrainSection = TrainSection()
    lab: LabSection = LabSection()
    logging: LoggingSection = LoggingSection()


def load_config(config_path: str) -> Dict[str, Any]:
    load_dotenv()

    if not os.path.exists(config_path):
        logger.error(f"Configuration file not found: {config_path}")
        raise ConfigError(f"Configuration file not found: {config_path}", key=config_path)

    try:
        with open(config_path, 'r') as f:
            config = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        logger.error(f"Error loading configuration from {config_path}: {e}")
        raise ConfigError(f"Malformed configuration file {config_path}: {e}", key=config_path)

    if not isinstance(config, dict):
        raise ConfigError(f"Configuration root must be a mapping: {config_path}", key=config_path)

    logger.info(f"Loaded configuration from {config_path}")
    return config


def parse_config(raw: Dict[str, Any]) -> AppConfig:
    try:
        return AppConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        logger.error(f"Invalid configuration key {key}: {first['msg']}")
        raise ConfigError(f"Invalid configuration key {key}: {first['msg']}", key=key)


def require_keys(raw: Dict[str, Any], paths: Iterable[str]) -> None:
    for path in paths:
        node: Any = raw
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node or node[part] is None:
                logger.error(f"Missing required configuration key: {path}")
                raise ConfigError(f"Missing required configuration key: {path}", key=path)
            node = node[part]


def load_app_config(config_path: str, required: Iterable[str] = ()) -> AppConfig:
    raw = load_config(config_path)
    config = parse_config(raw)
    require_keys(raw, required)
    return config
