"""freecrm - free completely random measures on the real line.

Laws of G(E) = α(E) + H(E) + J(E) as free characteristic triplets, their
densities recovered by Stieltjes inversion, the classical counterpart under
the Bercovici-Pata bijection, and random-matrix / Monte Carlo oracles.

Usage:
    Builder API:
    >>> import freecrm
    >>> system = freecrm.ModelBuilder.free_poisson(0.0, 10.0).build()
    >>> law = system.law("[0,2)")
    >>> table = system.density("[0,2)")

    Direct core access:
    >>> from freecrm import CharTriplet, GridSpec, free_density
    >>> semicircle = CharTriplet(a=1.0)
    >>> table = free_density(semicircle, GridSpec(-3.0, 3.0, 601))
"""

import logging

# Version information
from ._version import __author__, __email__, __license__, __version__, __version_info__

# Configure logging
logging.getLogger(__name__).addHandler(logging.NullHandler())

from .config import (
    InversionConfig,
    OracleConfig,
    QuadratureConfig,
    SolverConfig,
    ToolkitConfiguration,
    get_configuration,
    set_configuration,
)
from .exceptions import (
    DomainError,
    FreeCrmError,
    NumericalError,
    ParseError,
    PreconditionError,
    ThresholdError,
    ValidationError,
)

# Core numerics
from .core.levy import (
    CharTriplet,
    ExponentialDensity,
    Kind,
    LevyMeasure,
    PowerDensity,
    Side,
    TabulatedDensity,
    UniformDensity,
    validate_levy,
)
from .core.tables import DensityTable, EmpiricalSpectrum, GridSpec
from .core.transforms import (
    ConcreteLaw,
    cauchy_transform,
    classical_exponent,
    drift_cumulant_transform,
    free_cumulant_transform,
    poisson_cumulant_transform,
)
from .core.inversion import classical_density, free_density, ks_between, solve_F
from .core.bijection import bp_map, bp_unmap, check_homomorphism
from .core.fcrm import (
    BaseMeasure,
    FcrmModel,
    FixedAtom,
    RegionSet,
    check_additivity,
    check_refinement,
    classical_counterpart_law,
    g_law,
    h_law,
    j_law,
)
from .core.oracle import (
    MatrixModelSpec,
    free_add_oracle,
    sample_classical_L,
    sample_compound_free_poisson,
    sample_goe,
)

# Utilities
from .utils.logger import Logger, LoggerConfig
from .utils.export import export_data

# Builder API
from .builder import FcrmSystem, ModelBuilder


__all__ = [
    # Version information
    "__version__",
    "__version_info__",
    "__author__",
    "__email__",
    "__license__",
    # Builder API
    "ModelBuilder",
    "FcrmSystem",
    # Configuration
    "ToolkitConfiguration",
    "QuadratureConfig",
    "SolverConfig",
    "InversionConfig",
    "OracleConfig",
    "get_configuration",
    "set_configuration",
    # Lévy measures and triplets
    "CharTriplet",
    "Kind",
    "Side",
    "LevyMeasure",
    "UniformDensity",
    "ExponentialDensity",
    "PowerDensity",
    "TabulatedDensity",
    "validate_levy",
    # Tables
    "GridSpec",
    "DensityTable",
    "EmpiricalSpectrum",
    # Transforms
    "ConcreteLaw",
    "cauchy_transform",
    "free_cumulant_transform",
    "classical_exponent",
    "drift_cumulant_transform",
    "poisson_cumulant_transform",
    # Inversion
    "solve_F",
    "free_density",
    "classical_density",
    "ks_between",
    # Bijection
    "bp_map",
    "bp_unmap",
    "check_homomorphism",
    # Models
    "RegionSet",
    "BaseMeasure",
    "FixedAtom",
    "FcrmModel",
    "h_law",
    "j_law",
    "g_law",
    "classical_counterpart_law",
    "check_additivity",
    "check_refinement",
    # Oracles
    "MatrixModelSpec",
    "sample_goe",
    "sample_compound_free_poisson",
    "free_add_oracle",
    "sample_classical_L",
    # Utilities
    "Logger",
    "LoggerConfig",
    "export_data",
    # Exceptions
    "FreeCrmError",
    "ParseError",
    "ValidationError",
    "DomainError",
    "PreconditionError",
    "NumericalError",
    "ThresholdError",
]
