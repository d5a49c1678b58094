"""Core numerics for free completely random measures.

- levy: Lévy measures and characteristic triplets
- quadrature: adaptive integration over density components
- tables: grids, density tables and empirical spectra
- transforms: cumulant transforms and the Cauchy transform
- inversion: subordination solver and density recovery
- bijection: the Bercovici-Pata map and its checks
- fcrm: regions, models and the laws of G(E)
- oracle: random-matrix and Monte Carlo ground truth
"""

from .levy import (
    CharTriplet,
    ExponentialDensity,
    Kind,
    LevyMeasure,
    PowerDensity,
    Side,
    TabulatedDensity,
    UniformDensity,
    ValidationReport,
    triplet_add,
    validate_levy,
)
from .tables import DensityTable, EmpiricalSpectrum, GridSpec
from .transforms import (
    ConcreteLaw,
    cauchy_transform,
    classical_exponent,
    drift_cumulant_transform,
    free_cumulant_transform,
)
from .inversion import classical_density, free_density, ks_between, solve_F
from .bijection import bp_map, bp_unmap, check_homomorphism
from .fcrm import (
    BaseMeasure,
    FcrmModel,
    FixedAtom,
    RegionSet,
    check_additivity,
    classical_counterpart_law,
    g_law,
    h_law,
    j_law,
)
from .oracle import (
    MatrixModelSpec,
    free_add_oracle,
    sample_classical_L,
    sample_compound_free_poisson,
    sample_goe,
)

__all__ = [
    # levy
    "CharTriplet",
    "Kind",
    "LevyMeasure",
    "Side",
    "UniformDensity",
    "ExponentialDensity",
    "PowerDensity",
    "TabulatedDensity",
    "ValidationReport",
    "validate_levy",
    "triplet_add",
    # tables
    "GridSpec",
    "DensityTable",
    "EmpiricalSpectrum",
    # transforms
    "ConcreteLaw",
    "cauchy_transform",
    "free_cumulant_transform",
    "classical_exponent",
    "drift_cumulant_transform",
    # inversion
    "solve_F",
    "free_density",
    "classical_density",
    "ks_between",
    # bijection
    "bp_map",
    "bp_unmap",
    "check_homomorphism",
    # fcrm
    "RegionSet",
    "BaseMeasure",
    "FixedAtom",
    "FcrmModel",
    "h_law",
    "j_law",
    "g_law",
    "classical_counterpart_law",
    "check_additivity",
    # oracle
    "MatrixModelSpec",
    "sample_goe",
    "sample_compound_free_poisson",
    "free_add_oracle",
    "sample_classical_L",
]
