"""Data export utilities: JSON/YAML reports and CSV tables."""

import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from freecrm.exceptions import ValidationError

FLOAT_FORMAT = "%.17g"


def _sanitize_for_yaml(value: Any) -> Any:
    """Recursively convert unsupported YAML objects to plain Python values.

    numpy scalars and str-based enums subclass the plain types, which the safe
    dumper only represents by exact type.
    """
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return _sanitize_for_yaml(value.value)
    if value is None or type(value) in (str, int, float, bool):
        return value
    for plain in (bool, str, float, int):
        if isinstance(value, plain):
            return plain(value)
    if isinstance(value, dict):
        return {str(k): _sanitize_for_yaml(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, np.ndarray)):
        return [_sanitize_for_yaml(v) for v in value]
    return str(value)


def export_data(data: Dict[str, Any], format: str = "json", output_file: Optional[str] = None) -> str:
    """Export the given data to JSON or YAML.

    Args:
        data: Dictionary to export
        format: One of "json", "yaml", or "yml"
        output_file: Optional file path to write the exported content

    Returns:
        The exported string content

    Raises:
        ValidationError: If an unsupported format is provided
    """
    fmt = (format or "").strip().lower()
    if fmt not in {"json", "yaml", "yml"}:
        raise ValidationError(f"Unsupported export format: {format}")

    if fmt == "json":
        result = json.dumps(_sanitize_for_yaml(data), indent=2) + "\n"
    else:
        import yaml  # type: ignore

        result = yaml.safe_dump(_sanitize_for_yaml(data), default_flow_style=False, sort_keys=False)

    if output_file:
        Path(output_file).write_text(result, encoding="utf-8")

    return result


def _frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _emit(content: str, output_file: Optional[str]) -> str:
    if output_file:
        Path(output_file).write_text(content, encoding="utf-8")
    return content


def write_density_csv(table, output_file: Optional[str] = None) -> str:
    """``x,density`` rows followed by ``# atom,<location>,<mass>`` lines."""
    content = _frame_to_csv(pd.DataFrame({"x": table.xs, "density": table.rho}))
    for location, mass in table.atom_report:
        content += f"# atom,{FLOAT_FORMAT % location},{FLOAT_FORMAT % mass}\n"
    for note in table.notes:
        content += f"# note,{note}\n"
    return _emit(content, output_file)


def write_spectrum_csv(spectrum, output_file: Optional[str] = None) -> str:
    """``# model_tag,n,seed`` metadata line, then a ``value`` column."""
    content = f"# {spectrum.model_tag},{spectrum.n},{spectrum.seed}\n"
    content += _frame_to_csv(pd.DataFrame({"value": spectrum.values}))
    return _emit(content, output_file)


def write_cdf_comparison_csv(
    xs: Sequence[float],
    analytic: Sequence[float],
    empirical: Sequence[float],
    ks: float,
    output_file: Optional[str] = None,
) -> str:
    """Analytic and empirical CDFs on a common abscissa, with the KS value as metadata."""
    content = f"# ks,{FLOAT_FORMAT % ks}\n"
    content += _frame_to_csv(pd.DataFrame({
        "x": np.asarray(xs, dtype=float),
        "analytic_cdf": np.asarray(analytic, dtype=float),
        "empirical_cdf": np.asarray(empirical, dtype=float),
    }))
    return _emit(content, output_file)


__all__ = ["export_data", "write_density_csv", "write_spectrum_csv", "write_cdf_comparison_csv"]
