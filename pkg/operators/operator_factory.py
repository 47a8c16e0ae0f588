import logging
from typing import Any, Dict, Tuple

from cnst import defaults
from cnst.operator_kind import OperatorKind
from operators.blur_stride import BlurStrideOperator
from operators.fourier_subsample import FourierSubsampleOperator
from operators.identity import IdentityOperator
from operators.linear_operator import LinearOperator
from operators.radon import RadonOperator, limited_angle


class OperatorFactory:
    _logger = logging.getLogger(__name__)

    @staticmethod
    def create_operator(kind: str, shape: Tuple[int, int], config: Dict[str, Any]) -> LinearOperator:
        if not kind:
            OperatorFactory._logger.error("problem.operator is missing or empty")
            raise ValueError("problem.operator is required and cannot be empty")
        if len(shape) != 2 or min(shape) < 1:
            OperatorFactory._logger.error(f"Invalid image shape for forward operator: {shape}")
            raise ValueError(f"Forward operators act on non-empty 2D images, got shape {shape}")

        operator_kind = OperatorKind.from_value(kind)

        if operator_kind == OperatorKind.IDENTITY:
            return IdentityOperator(shape)

        elif operator_kind == OperatorKind.BLUR_STRIDE:
            OperatorFactory._logger.info("Creating blur+stride operator")
            return BlurStrideOperator(shape,
                                      kernel_size=int(config.get("blur_kernel_size", defaults.BLUR_KERNEL_SIZE)),
                                      std=float(config.get("blur_std", defaults.BLUR_STD)),
                                      stride=int(config.get("stride", defaults.BLUR_STRIDE)))

        elif operator_kind == OperatorKind.FOURIER_SUBSAMPLE:
            OperatorFactory._logger.info("Creating subsampled Fourier operator")
            return FourierSubsampleOperator(shape,
                                            acceleration=int(config.get("acceleration", defaults.MRI_ACCELERATION)),
                                            center_fraction=float(config.get("center_fraction",
                                                                             defaults.MRI_CENTER_FRACTION)),
                                            seed=int(config.get("mask_seed", 0)))

        OperatorFactory._logger.info("Creating parallel-beam Radon operator")
        radon = RadonOperator(shape, n_angles=int(config.get("n_angles", 60)),
                              n_detectors=config.get("n_detectors"), pixel_size=config.get("pixel_size"))
        fraction = float(config.get("limited_angle_fraction") or 0.0)
        if fraction > 0.0:
            return limited_angle(radon, fraction)
        return radon
