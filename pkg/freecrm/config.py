"""
Configuration management for freecrm.

Dataclasses holding every numerical knob of the toolkit. Public operations
accept ``config=None`` and fall back to the process-wide default returned by
``get_configuration()``.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

from freecrm.constants import (
    ATOM_MERGE_TOL,
    ATOM_THRESHOLD,
    MASS_TOL,
    QUAD_ABS_TOL,
    QUAD_LIMIT,
    SMALL_JUMP_TRUNCATION,
    SOLVER_MAX_ITER,
    SOLVER_TOL,
)
from freecrm.exceptions import ValidationError
from freecrm.utils.logger import Logger

logger = Logger.get_logger()


@dataclass
class QuadratureConfig:
    """Adaptive quadrature settings."""
    abs_tol: float = QUAD_ABS_TOL
    rel_tol: float = 1e-10
    limit: int = QUAD_LIMIT  # subinterval cap of the adaptive refinement
    chunk_size: int = 64  # evaluation points per vectorized call
    merge_tol: float = ATOM_MERGE_TOL


@dataclass
class SolverConfig:
    """Settings of the F-inverse fixed-point solver."""
    tol: float = SOLVER_TOL
    max_iter: int = SOLVER_MAX_ITER
    damping: float = 0.5
    newton_switch: float = 1e-3
    diff_step: float = 1e-6
    max_backtracks: int = 12


@dataclass
class InversionConfig:
    """Settings of Stieltjes and Fourier inversion."""
    eps: Optional[float] = None
    eps_levels: int = 2
    atom_threshold: float = ATOM_THRESHOLD
    atom_min_mass: float = 1e-4
    max_missing_fraction: float = 0.01
    mass_tol: float = MASS_TOL
    continuation_ratio: float = 0.25
    workers: int = 1
    fft_oversample: int = 2
    fft_max_size: int = 2**18
    cf_cutoff: float = 1e-12
    pmf_tail: float = 1e-13


@dataclass
class OracleConfig:
    """Monte Carlo oracle settings."""
    truncation: float = SMALL_JUMP_TRUNCATION
    block_size: int = 1024


@dataclass
class ToolkitConfiguration:
    """Complete freecrm configuration."""

    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    inversion: InversionConfig = field(default_factory=InversionConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    log_level: str = "WARNING"

    def validate(self) -> None:
        """Validate configuration settings."""
        if self.quadrature.abs_tol <= 0 or self.quadrature.rel_tol < 0:
            raise ValidationError("Quadrature tolerances must be positive")
        if self.quadrature.limit < 1 or self.quadrature.chunk_size < 1:
            raise ValidationError("Quadrature limit and chunk size must be positive")
        if self.solver.tol <= 0:
            raise ValidationError("Solver tolerance must be positive")
        if self.solver.max_iter < 1:
            raise ValidationError("Solver iteration cap must be positive")
        if not 0.0 < self.solver.damping <= 1.0:
            raise ValidationError("Damping factor must lie in (0, 1]")
        if self.inversion.eps is not None and self.inversion.eps <= 0:
            raise ValidationError("Stieltjes offset must be positive")
        if self.inversion.eps_levels < 1:
            raise ValidationError("At least one Stieltjes offset level is required")
        if not 0.0 < self.inversion.continuation_ratio < 1.0:
            raise ValidationError("Continuation ratio must lie in (0, 1)")
        if self.inversion.workers < 1:
            raise ValidationError("Worker count must be positive")
        if self.oracle.truncation <= 0:
            raise ValidationError("Jump truncation must be positive")
        if self.oracle.block_size < 1:
            raise ValidationError("Replicate block size must be positive")

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to a plain dictionary."""
        return asdict(self)

    @classmethod
    def from_env(cls) -> ToolkitConfiguration:
        """Defaults with ``FREECRM_*`` environment overrides applied.

        FREECRM_QUAD_TOL: float
        FREECRM_SOLVER_TOL: float
        FREECRM_MAX_ITER: int
        FREECRM_WORKERS: int
        FREECRM_TRUNCATION: float
        FREECRM_LOG_LEVEL: str
        """
        config = cls()
        overrides = {
            "FREECRM_QUAD_TOL": (config.quadrature, "abs_tol", float),
            "FREECRM_SOLVER_TOL": (config.solver, "tol", float),
            "FREECRM_MAX_ITER": (config.solver, "max_iter", int),
            "FREECRM_WORKERS": (config.inversion, "workers", int),
            "FREECRM_TRUNCATION": (config.oracle, "truncation", float),
        }
        for name, (section, attr, cast) in overrides.items():
            raw = os.environ.get(name)
            if not raw:
                continue
            try:
                setattr(section, attr, cast(raw))
            except ValueError:
                logger.debug("Ignoring bad override %s=%r", name, raw)
        level = os.environ.get("FREECRM_LOG_LEVEL")
        if level:
            config.log_level = level.strip().upper()
        try:
            config.validate()
        except ValidationError as exc:
            logger.debug("Environment overrides rejected (%s); using defaults", exc)
            config = cls()
        return config


_default_configuration: Optional[ToolkitConfiguration] = None


def get_configuration() -> ToolkitConfiguration:
    """Process-wide default configuration (environment overrides applied once)."""
    global _default_configuration
    if _default_configuration is None:
        _default_configuration = ToolkitConfiguration.from_env()
    return _default_configuration


def set_configuration(config: Optional[ToolkitConfiguration]) -> None:
    """Replace the process-wide default; ``None`` restores environment defaults."""
    global _default_configuration
    if config is not None:
        config.validate()
    _default_configuration = config


def resolve(config: Optional[ToolkitConfiguration]) -> ToolkitConfiguration:
    """Return ``config`` or the process default."""
    return config if config is not None else get_configuration()
