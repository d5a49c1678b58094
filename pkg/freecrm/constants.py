"""Constants used throughout the freecrm package."""

from typing import Final

# Atom locations closer than this are the same atom
ATOM_MERGE_TOL: Final[float] = 1e-12

# Quadrature defaults
QUAD_ABS_TOL: Final[float] = 1e-10
QUAD_LIMIT: Final[int] = 2000

# Fixed-point solver defaults
SOLVER_TOL: Final[float] = 1e-10
SOLVER_MAX_ITER: Final[int] = 500

# Stieltjes inversion defaults
MASS_TOL: Final[float] = 2e-2
ATOM_THRESHOLD: Final[float] = 0.05

# Jumps below this size are dropped (and compensated) in samplers
SMALL_JUMP_TRUNCATION: Final[float] = 1e-4

# Triplet comparisons after region-mass rounding
TRIPLET_TOL: Final[float] = 1e-9

# CLI exit codes
EXIT_OK: Final[int] = 0
EXIT_PARSE: Final[int] = 2
EXIT_VALIDATION: Final[int] = 3
EXIT_NUMERICAL: Final[int] = 4
EXIT_THRESHOLD: Final[int] = 5
