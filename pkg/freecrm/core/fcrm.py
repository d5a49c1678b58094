"""Free completely random measures on the line, at the level of laws.

A model G(E) = α(E) + H(E) + J(E) is given by a deterministic measure α, the
intensity ν_E of the Poisson-integral part H with positive jump measure ν_B,
and fixed atoms carrying free-regular laws. Every law is returned as a free
characteristic triplet; free convolution is triplet addition.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from functools import reduce
from typing import List, Optional, Sequence, Tuple

from freecrm.config import ToolkitConfiguration, resolve
from freecrm.core.levy import (
    CharTriplet,
    DensityComponent,
    Kind,
    LevyMeasure,
    TabulatedDensity,
    UniformDensity,
    triplet_add,
    triplet_shift,
    triplet_sum,
    validate_levy,
)
from freecrm.core.tables import GridSpec
from freecrm.exceptions import ParseError, PreconditionError, ValidationError
from freecrm.utils.logger import Logger

logger = Logger.get_logger()

_INTERVAL = re.compile(r"^\[([^,\[\])]+),([^,\[\])]+)\)$")
_EMPTY_TOKENS = {"", "∅", "{}", "empty"}


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


def _normalize(intervals: Sequence[Tuple[float, float]]) -> Tuple[Tuple[float, float], ...]:
    merged: List[List[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class RegionSet:
    """Finite union of half-open intervals [lo, hi), kept sorted and disjoint.

    Overlapping or adjacent input intervals are merged on construction.

    Examples:
        >>> RegionSet(((0.0, 1.0), (1.0, 2.0)))
        RegionSet(intervals=((0.0, 2.0),))
    """

    intervals: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        cleaned = []
        for lo, hi in self.intervals:
            lo, hi = float(lo), float(hi)
            if math.isnan(lo) or math.isnan(hi) or not lo < hi:
                raise ValidationError(f"Interval [{lo}, {hi}) needs lo < hi")
            cleaned.append((lo, hi))
        object.__setattr__(self, "intervals", _normalize(cleaned))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "RegionSet":
        return cls(((lo, hi),))

    @classmethod
    def parse(cls, text: str) -> "RegionSet":
        """Parse ``[a,b)+[c,d)`` (whitespace ignored, endpoints strictly increasing)."""
        compact = re.sub(r"\s+", "", text or "")
        if compact in _EMPTY_TOKENS:
            return cls()
        intervals = []
        previous_hi: Optional[float] = None
        for token in compact.split("+"):
            match = _INTERVAL.match(token)
            if not match:
                raise ParseError(f"Region term {token!r} is not of the form [a,b)")
            try:
                lo, hi = float(match.group(1)), float(match.group(2))
            except ValueError as exc:
                raise ParseError(f"Bad number in region term {token!r}") from exc
            if not lo < hi:
                raise ParseError(f"Region term {token!r} needs a < b")
            if previous_hi is not None and lo <= previous_hi:
                raise ParseError(f"Region terms must be listed with strictly increasing endpoints: {text!r}")
            previous_hi = hi
            intervals.append((lo, hi))
        return cls(tuple(intervals))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        return any(lo <= x < hi for lo, hi in self.intervals)

    def union(self, other: "RegionSet") -> "RegionSet":
        return RegionSet(self.intervals + other.intervals)

    def intersection(self, other: "RegionSet") -> "RegionSet":
        pieces = []
        for a_lo, a_hi in self.intervals:
            for b_lo, b_hi in other.intervals:
                lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
                if lo < hi:
                    pieces.append((lo, hi))
        return RegionSet(tuple(pieces))

    def is_disjoint(self, other: "RegionSet") -> bool:
        return self.intersection(other).is_empty

    def issubset(self, other: "RegionSet") -> bool:
        return self.intersection(other) == self

    def __str__(self) -> str:
        if self.is_empty:
            return "∅"
        return "+".join(f"[{lo:g},{hi:g})" for lo, hi in self.intervals)


def union_all(regions: Sequence[RegionSet]) -> RegionSet:
    return reduce(RegionSet.union, regions, RegionSet())


def _require_pairwise_disjoint(regions: Sequence[RegionSet], what: str) -> None:
    for i, first in enumerate(regions):
        for second in regions[i + 1:]:
            if not first.is_disjoint(second):
                raise ValidationError(f"{what} are not pairwise disjoint: {first} and {second}")


# ---------------------------------------------------------------------------
# Model data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseMeasure:
    """Deterministic measure on the line: atoms plus density components."""

    atoms: Tuple[Tuple[float, float], ...] = ()
    densities: Tuple[DensityComponent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple((float(x), float(w)) for x, w in self.atoms))
        # 0 belongs to the support of a base measure
        densities = tuple(
            replace(c, spans_origin=True) if isinstance(c, TabulatedDensity) else c for c in self.densities
        )
        object.__setattr__(self, "densities", densities)

    @classmethod
    def lebesgue(cls, lo: float, hi: float, height: float = 1.0) -> "BaseMeasure":
        return cls(densities=(UniformDensity(lo, hi, height),))

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.densities

    def check(self) -> List[str]:
        problems = []
        for x, w in self.atoms:
            if not (math.isfinite(x) and math.isfinite(w)) or w < 0:
                problems.append(f"base measure atom ({x}, {w}) needs a finite location and weight >= 0")
        for component in self.densities:
            problems.extend(component.check())
        return problems


def region_mass(m: BaseMeasure, E: RegionSet) -> float:
    """m(E): atoms located in E plus the density mass of E."""
    mass = sum(w for x, w in m.atoms if E.contains(x))
    for component in m.densities:
        mass += sum(component.mass_between(lo, hi) for lo, hi in E.intervals)
    return float(mass)


@dataclass(frozen=True)
class FixedAtom:
    """Location x ∈ D carrying the free-regular law of V_x."""

    location: float
    law: CharTriplet

    def check(self, config: Optional[ToolkitConfiguration] = None) -> List[str]:
        prefix = f"fixed atom at {self.location}"
        if self.law.kind is not Kind.FREE:
            return [f"{prefix}: law must be a free triplet"]
        report = validate_levy(self.law.nu, config)
        problems = [f"{prefix}: {m}" for m in report.messages]
        problems += [f"{prefix}: {m}" for m in self.law.free_regular_violations()]
        return problems


@dataclass(frozen=True)
class FcrmModel:
    """Data of G = α + H + J."""

    alpha: BaseMeasure = field(default_factory=BaseMeasure)
    nu_E: BaseMeasure = field(default_factory=BaseMeasure)
    nu_B: LevyMeasure = field(default_factory=LevyMeasure)
    fixed_atoms: Tuple[FixedAtom, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "fixed_atoms", tuple(self.fixed_atoms))

    @property
    def is_wfa(self) -> bool:
        """True when the model has no fixed atoms."""
        return not self.fixed_atoms

    def validate(self, config: Optional[ToolkitConfiguration] = None) -> List[str]:
        """Every violated invariant, as messages (empty when valid)."""
        problems = [f"alpha: {m}" for m in self.alpha.check()]
        problems += [f"nu_E: {m}" for m in self.nu_E.check()]
        report = validate_levy(self.nu_B, config)
        problems += [f"nu_B: {m}" for m in report.messages]
        if not self.nu_B.is_positive():
            problems.append("nu_B: jump measure must be carried by (0, ∞)")
        if report.ok and not math.isfinite(report.small_jump_abs_mean):
            problems.append("nu_B: ∫_{|x|<=1}|x|ν_B(dx) must be finite")
        locations = [a.location for a in self.fixed_atoms]
        if len(set(locations)) != len(locations):
            problems.append("fixed atom locations must be distinct")
        for atom in self.fixed_atoms:
            problems.extend(atom.check(config))
        return problems

    def require_valid(self, config: Optional[ToolkitConfiguration] = None) -> "FcrmModel":
        problems = self.validate(config)
        if problems:
            raise ValidationError("; ".join(problems), messages=problems)
        return self


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------


def h_law(model: FcrmModel, E: RegionSet, config: Optional[ToolkitConfiguration] = None) -> CharTriplet:
    """Free triplet of the Poisson-integral part H(E).

    With λ = ν_E(E) the law is (0, λ∫_{|x|<=1} x ν_B(dx), λν_B): the
    uncompensated integral ∫(1/(1−zx) − 1) λν_B(dx) rewritten with the
    compensator x·1_{|x|<=1} folded into the drift.

    Raises:
        PreconditionError: if ν_B has an infinite small-jump mean.
    """
    report = validate_levy(model.nu_B, config)
    if not math.isfinite(report.small_jump_abs_mean):
        raise PreconditionError(
            "h_law requires the jump measure to satisfy ∫_{|x|<=1}|x|ν_B(dx) < ∞",
            report=report,
        )
    lam = region_mass(model.nu_E, E)
    if lam == 0.0 or model.nu_B.is_empty:
        return CharTriplet.zero(Kind.FREE)
    nu = model.nu_B.scaled(lam).normalized()
    return CharTriplet(0.0, lam * model.nu_B.unit_first_moment(), nu, Kind.FREE)


def j_law(model: FcrmModel, E: RegionSet) -> CharTriplet:
    """Free triplet of J(E): the sum of the fixed-atom laws located in E."""
    return triplet_sum((a.law for a in model.fixed_atoms if E.contains(a.location)), Kind.FREE)


def g_law(model: FcrmModel, E: RegionSet, config: Optional[ToolkitConfiguration] = None) -> CharTriplet:
    """Free triplet of G(E) = α(E) + H(E) + J(E)."""
    law = triplet_shift(triplet_add(h_law(model, E, config), j_law(model, E)), region_mass(model.alpha, E))
    logger.debug("g_law on %s: a=%g eta=%.12g", E, law.a, law.eta)
    return law


def classical_counterpart_law(
    model: FcrmModel,
    E: RegionSet,
    config: Optional[ToolkitConfiguration] = None,
) -> CharTriplet:
    """Classical triplet of α(E) + L(E); maps to ``g_law`` under the Bercovici-Pata bijection.

    Raises:
        PreconditionError: if the model has fixed atoms.
    """
    if not model.is_wfa:
        raise PreconditionError("The classical counterpart law requires a model without fixed atoms")
    return g_law(model, E, config).with_kind(Kind.CLASSICAL)


# ---------------------------------------------------------------------------
# Law-level checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdditivityReport:
    union_law: CharTriplet
    parts_sum: CharTriplet
    exact: bool
    oracle_ks: Optional[float] = None
    details: Tuple[str, ...] = ()


def check_additivity(
    model: FcrmModel,
    parts: Sequence[RegionSet],
    oracle_n: Optional[int] = None,
    seed: int = 0,
    grid: Optional[GridSpec] = None,
    config: Optional[ToolkitConfiguration] = None,
) -> AdditivityReport:
    """Compare g_law of the union with the triplet sum over disjoint parts.

    With ``oracle_n`` the free density of the union law is also compared (KS)
    with the spectrum of independently rotated part samples.

    Raises:
        ValidationError: if the parts are not pairwise disjoint.
    """
    cfg = resolve(config)
    _require_pairwise_disjoint(parts, "Parts")
    union = union_all(parts)
    union_law = g_law(model, union, cfg)
    part_laws = [g_law(model, p, cfg) for p in parts]
    total = triplet_sum(part_laws, Kind.FREE)
    exact = union_law.isclose(total)
    details = [f"union {union}: {'equal' if exact else 'DIFFERENT'} to the sum over {len(parts)} parts"]

    ks: Optional[float] = None
    if oracle_n is not None:
        from freecrm.core import inversion, oracle

        truncation = cfg.oracle.truncation
        specs = [oracle.matrix_spec_for(law, truncation) for law in part_laws if not _is_zero(law)]
        if not specs:
            specs = [oracle.MatrixModelSpec.shifted(0.0)]
        spectrum = oracle.free_add_oracle(specs, oracle_n, seed)
        table = inversion.free_density(union_law, grid or inversion.default_grid(union_law, config=cfg), cfg)
        ks = inversion.ks_between(table, spectrum, cfg)
        details.append(f"oracle KS {ks:.4f} at n={oracle_n}, seed={seed}")

    return AdditivityReport(union_law, total, exact, ks, tuple(details))


def _is_zero(t: CharTriplet) -> bool:
    return t.is_point_mass and t.eta == 0.0


@dataclass(frozen=True)
class RefinementReport:
    rows: Tuple[Tuple[str, int, bool], ...]

    @property
    def exact(self) -> bool:
        return all(row[2] for row in self.rows)


def check_refinement(
    model: FcrmModel,
    coarse: Sequence[RegionSet],
    fine: Sequence[RegionSet],
    config: Optional[ToolkitConfiguration] = None,
) -> RefinementReport:
    """Each coarse set's triplet equals the sum over the fine sets refining it.

    Raises:
        ValidationError: if ``fine`` is not pairwise disjoint or some coarse
            set is not a union of fine sets.
    """
    _require_pairwise_disjoint(fine, "Fine sets")
    rows = []
    for region in coarse:
        members = [f for f in fine if not f.is_empty and f.issubset(region)]
        if union_all(members) != region:
            raise ValidationError(f"Coarse set {region} is not a union of fine sets")
        coarse_law = g_law(model, region, config)
        summed = triplet_sum((g_law(model, f, config) for f in members), Kind.FREE)
        rows.append((str(region), len(members), coarse_law.isclose(summed)))
    return RefinementReport(tuple(rows))


@dataclass(frozen=True)
class SubordinatorPath:
    times: Tuple[float, ...]
    values: Tuple[CharTriplet, ...]
    increments: Tuple[CharTriplet, ...]
    additive: bool


def subordinator_path(
    model: FcrmModel,
    times: Sequence[float],
    config: Optional[ToolkitConfiguration] = None,
) -> SubordinatorPath:
    """Triplets of t -> H([0, t)) and of its increments over [t_{k-1}, t_k).

    ``additive`` holds when every path value equals the sum of the increments
    before it.
    """
    grid = [float(t) for t in times]
    if not grid or grid[0] <= 0 or any(b <= a for a, b in zip(grid[:-1], grid[1:])):
        raise ValidationError("Times must be positive and strictly increasing")
    values = tuple(h_law(model, RegionSet.interval(0.0, t), config) for t in grid)
    edges = [0.0] + grid
    increments = tuple(
        h_law(model, RegionSet.interval(a, b), config) for a, b in zip(edges[:-1], edges[1:])
    )
    additive = True
    running = CharTriplet.zero(Kind.FREE)
    for value, increment in zip(values, increments):
        running = triplet_add(running, increment)
        additive = additive and value.isclose(running)
    return SubordinatorPath(tuple(grid), values, increments, additive)
