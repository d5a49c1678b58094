"""Utility modules for the freecrm package.

- common: error-translation decorator and headings
- formatters: tabulated rendering of triplets and reports
- export: JSON/YAML export and CSV writers
- logger: the shared singleton logger

``schema`` depends on the core types and is imported on its own.
"""

from .common import (
    create_highlighted_heading,
    translate_numpy_errors,
)
from .export import export_data, write_cdf_comparison_csv, write_density_csv, write_spectrum_csv
from .formatters import format_density_summary, format_rows, format_triplet
from .logger import Logger, LoggerConfig

__all__ = [
    # Common utilities
    "translate_numpy_errors",
    "create_highlighted_heading",
    # Formatters
    "format_triplet",
    "format_density_summary",
    "format_rows",
    # Export
    "export_data",
    "write_density_csv",
    "write_spectrum_csv",
    "write_cdf_comparison_csv",
    # Logging
    "Logger",
    "LoggerConfig",
]
