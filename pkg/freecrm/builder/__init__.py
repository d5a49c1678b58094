"""
freecrm Builder - fluent API for assembling and querying models.

The builder validates the model once; the resulting ``FcrmSystem`` exposes
laws, recovered densities and oracle comparisons for regions of the line.
"""

from .facade import FcrmSystem, ModelBuilder, OracleComparison, compare_with_oracle

__all__ = [
    "ModelBuilder",
    "FcrmSystem",
    "OracleComparison",
    "compare_with_oracle",
]
