import logging
from typing import Any, Dict

from cnst import defaults
from cnst.fidelity_kind import FidelityKind
from fidelity.ct_poisson import CTPoissonFidelity
from fidelity.fidelity import Fidelity
from fidelity.scaled_quadratic import ScaledQuadraticFidelity


class FidelityFactory:
    _logger = logging.getLogger(__name__)

    @staticmethod
    def create_fidelity(kind: str, config: Dict[str, Any]) -> Fidelity:
        if not kind:
            FidelityFactory._logger.error("problem.fidelity is missing or empty")
            raise ValueError("problem.fidelity is required and cannot be empty")

        fidelity_kind = FidelityKind.from_value(kind)

        if fidelity_kind == FidelityKind.SCALED_QUADRATIC:
            return ScaledQuadraticFidelity(sigma=float(config.get("fidelity_sigma", 1.0)))

        FidelityFactory._logger.info("Creating CT Poisson fidelity")
        return CTPoissonFidelity(n0=float(config.get("n0", defaults.CT_PHOTON_COUNT)),
                                 mu_ct=float(config.get("mu_ct", defaults.CT_ATTENUATION)),
                                 t_floor=float(config.get("t_floor", 0.0)))
