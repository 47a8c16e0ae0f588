import logging
import math
import os
from typing import Any, Mapping

import numpy as np

logger = logging.getLogger(__name__)


def format_report_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_report_value(v) for v in np.asarray(value).ravel().tolist())
    if value is None:
        return "none"
    return str(value)


def write_report(path: str, mapping: Mapping[str, Any]) -> None:
    """``key: value`` lines in insertion order."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for key, value in mapping.items():
            f.write(f"{key}: {format_report_value(value)}\n")
    logger.info(f"Wrote report with {len(mapping)} entries to {path}")
