"""
freecrm Builder Facade - fluent model construction and orchestration.

``ModelBuilder`` assembles an ``FcrmModel`` step by step and ``build()``
validates it into an ``FcrmSystem``, the object the CLI drives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..config import ToolkitConfiguration, resolve
from ..core import inversion, oracle
from ..core.fcrm import (
    AdditivityReport,
    BaseMeasure,
    FcrmModel,
    FixedAtom,
    RefinementReport,
    RegionSet,
    check_additivity,
    check_refinement,
    classical_counterpart_law,
    g_law,
    region_mass,
)
from ..core.levy import CharTriplet, Kind, LevyMeasure, PowerDensity
from ..core.tables import DensityTable, EmpiricalSpectrum, GridSpec
from ..utils.logger import Logger

logger = Logger.get_logger()

RegionLike = Union[RegionSet, str]


def as_region(region: RegionLike) -> RegionSet:
    return region if isinstance(region, RegionSet) else RegionSet.parse(region)


@dataclass(frozen=True)
class OracleComparison:
    """Analytic law of a free triplet against a random-matrix spectrum."""

    law: CharTriplet
    table: DensityTable
    spectrum: EmpiricalSpectrum
    ks: float

    @property
    def analytic_cdf(self) -> np.ndarray:
        return self.table.cdf(self.table.xs) / self.table.captured_mass

    @property
    def empirical_cdf(self) -> np.ndarray:
        return self.spectrum.cdf(self.table.xs)


def compare_with_oracle(
    law: CharTriplet,
    n: int,
    seed: int,
    grid: Optional[GridSpec] = None,
    config: Optional[ToolkitConfiguration] = None,
) -> OracleComparison:
    """Recover the free density of ``law`` and KS-compare it with a matrix spectrum of size ``n``."""
    cfg = resolve(config)
    truncation = None if math.isfinite(law.nu.total_mass()) else cfg.oracle.truncation
    spectrum = oracle.free_add_oracle([oracle.matrix_spec_for(law, truncation)], n, seed)
    table = inversion.free_density(law, grid or inversion.default_grid(law, config=cfg), cfg)
    ks = inversion.ks_between(table, spectrum, cfg)
    logger.info("oracle comparison: KS %.4f (n=%d, seed=%d, %s)", ks, n, seed, spectrum.model_tag)
    return OracleComparison(law, table, spectrum, ks)


class ModelBuilder:
    """Fluent builder for free completely random measure models.

    Example:
        >>> system = (ModelBuilder()
        ...     .with_intensity(BaseMeasure.lebesgue(0.0, 10.0))
        ...     .with_jumps(LevyMeasure.point(1.0))
        ...     .build())
        >>> system.law("[0,2)")
    """

    def __init__(self, config: Optional[ToolkitConfiguration] = None):
        self._alpha = BaseMeasure()
        self._nu_E = BaseMeasure()
        self._nu_B = LevyMeasure()
        self._fixed_atoms: List[FixedAtom] = []
        self._config = config

    # === Model data ===

    def with_alpha(self, alpha: BaseMeasure) -> ModelBuilder:
        """Deterministic part α."""
        self._alpha = alpha
        return self

    def with_intensity(self, nu_E: BaseMeasure) -> ModelBuilder:
        """Intensity ν_E of the Poisson-integral part."""
        self._nu_E = nu_E
        return self

    def with_jumps(self, nu_B: LevyMeasure) -> ModelBuilder:
        """Jump measure ν_B, carried by (0, ∞)."""
        self._nu_B = nu_B
        return self

    def add_fixed_atom(self, location: float, law: CharTriplet) -> ModelBuilder:
        """Fixed atom at ``location`` carrying a free-regular law."""
        self._fixed_atoms.append(FixedAtom(float(location), law.with_kind(Kind.FREE)))
        return self

    def with_config(self, config: ToolkitConfiguration) -> ModelBuilder:
        self._config = config
        return self

    # === Builder methods ===

    def model(self) -> FcrmModel:
        return FcrmModel(self._alpha, self._nu_E, self._nu_B, tuple(self._fixed_atoms))

    def build(self) -> FcrmSystem:
        """Validate the model and wrap it.

        Raises:
            ValidationError: listing every violated invariant.
        """
        return FcrmSystem(self.model().require_valid(self._config), self._config)

    # === Presets ===

    @classmethod
    def deterministic(cls, lo: float = 0.0, hi: float = 1.0, height: float = 1.0) -> ModelBuilder:
        """G = α, a constant density on [lo, hi]."""
        return cls().with_alpha(BaseMeasure.lebesgue(lo, hi, height))

    @classmethod
    def free_poisson(cls, lo: float = 0.0, hi: float = 10.0, rate: float = 1.0) -> ModelBuilder:
        """Free Poisson random measure: unit jumps at Lebesgue intensity ``rate``."""
        return cls().with_intensity(BaseMeasure.lebesgue(lo, hi, rate)).with_jumps(LevyMeasure.point(1.0))

    @classmethod
    def compound_free_poisson(
        cls,
        jumps: LevyMeasure,
        lo: float = 0.0,
        hi: float = 10.0,
        rate: float = 1.0,
    ) -> ModelBuilder:
        """Compound free Poisson random measure with jump law ``jumps``."""
        return cls().with_intensity(BaseMeasure.lebesgue(lo, hi, rate)).with_jumps(jumps)

    @classmethod
    def half_stable_subordinator(cls, c: float = 1.0, horizon: float = 10.0) -> ModelBuilder:
        """Free 1/2-stable subordinator on [0, horizon): jump density c·x^{-3/2} on (0, ∞)."""
        return (cls()
                .with_intensity(BaseMeasure.lebesgue(0.0, horizon))
                .with_jumps(LevyMeasure(densities=(PowerDensity(0.5, c),))))


class FcrmSystem:
    """A validated model plus the configuration its numerics run under."""

    def __init__(self, model: FcrmModel, config: Optional[ToolkitConfiguration] = None):
        self.model = model
        self.config = resolve(config)

    def law(self, region: RegionLike) -> CharTriplet:
        return g_law(self.model, as_region(region), self.config)

    def classical_law(self, region: RegionLike) -> CharTriplet:
        return classical_counterpart_law(self.model, as_region(region), self.config)

    def density(self, region: RegionLike, grid: Optional[GridSpec] = None) -> DensityTable:
        law = self.law(region)
        return inversion.free_density(law, grid or inversion.default_grid(law, config=self.config), self.config)

    def classical_density(self, region: RegionLike, grid: Optional[GridSpec] = None) -> DensityTable:
        law = self.classical_law(region)
        return inversion.classical_density(law, grid or inversion.default_grid(law, config=self.config), self.config)

    def oracle_compare(
        self,
        region: RegionLike,
        n: int,
        seed: int,
        grid: Optional[GridSpec] = None,
    ) -> OracleComparison:
        return compare_with_oracle(self.law(region), n, seed, grid, self.config)

    def classical_compare(
        self,
        region: RegionLike,
        reps: int,
        seed: int,
        grid: Optional[GridSpec] = None,
    ) -> float:
        """KS distance between the classical counterpart density and Monte Carlo samples of L(E)."""
        E = as_region(region)
        table = self.classical_density(E, grid)
        return inversion.ks_between(table, self.classical_samples(E, reps, seed), self.config)

    def classical_samples(self, region: RegionLike, reps: int, seed: int) -> EmpiricalSpectrum:
        """Monte Carlo draws of α(E) + L(E), small jumps truncated when ν_B has infinite mass."""
        truncation = None if math.isfinite(self.model.nu_B.total_mass()) else self.config.oracle.truncation
        return oracle.sample_classical_L(self.model, as_region(region), reps, seed, truncation, self.config)

    def additivity(
        self,
        parts: Sequence[RegionLike],
        oracle_n: Optional[int] = None,
        seed: int = 0,
    ) -> AdditivityReport:
        return check_additivity(self.model, [as_region(p) for p in parts], oracle_n, seed, config=self.config)

    def refinement(self, coarse: Sequence[RegionLike], fine: Sequence[RegionLike]) -> RefinementReport:
        return check_refinement(
            self.model, [as_region(c) for c in coarse], [as_region(f) for f in fine], self.config
        )

    def summary(self, region: Optional[RegionLike] = None) -> Dict[str, Any]:
        """Plain-data overview of the model, and of the law on ``region`` when given."""
        from ..utils.schema import model_to_dict, triplet_to_dict

        out: Dict[str, Any] = {
            "model": model_to_dict(self.model),
            "wfa": self.model.is_wfa,
            "configuration": self.config.to_dict(),
        }
        if region is not None:
            E = as_region(region)
            out["region"] = str(E)
            out["intensity_mass"] = region_mass(self.model.nu_E, E)
            out["law"] = triplet_to_dict(self.law(E))
        return out


__all__ = [
    "ModelBuilder",
    "FcrmSystem",
    "OracleComparison",
    "compare_with_oracle",
    "as_region",
]
