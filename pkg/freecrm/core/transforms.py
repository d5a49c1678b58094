"""Analytic transforms of concrete laws and characteristic triplets.

All evaluators accept a scalar or a numpy array of points and return the same
shape. Lévy-measure integrals are computed with atoms summed exactly and
densities integrated adaptively in batches of ``QuadratureConfig.chunk_size``
points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from freecrm.config import ToolkitConfiguration, resolve
from freecrm.core.levy import CharTriplet, Kind, LevyMeasure, validate_levy
from freecrm.core.quadrature import chunked
from freecrm.core.tables import DensityTable
from freecrm.exceptions import DomainError, PreconditionError, ValidationError
from freecrm.utils.logger import Logger

logger = Logger.get_logger()

ArrayLike = Union[complex, float, np.ndarray]

_MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ConcreteLaw:
    """Probability measure given by atoms and an optional tabulated density."""

    atoms: Tuple[Tuple[float, float], ...] = ()
    density: Optional[DensityTable] = field(default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple((float(x), float(m)) for x, m in self.atoms))
        if any(m < 0 for _, m in self.atoms):
            raise ValidationError("ConcreteLaw atom masses must be nonnegative")
        if self.density is not None and np.any(self.density.rho < 0):
            raise ValidationError("ConcreteLaw density must be nonnegative")
        total = self.total_mass
        if abs(total - 1.0) > _MASS_TOL:
            raise ValidationError(f"ConcreteLaw total mass {total:.12g} is not 1", total_mass=total)

    @property
    def total_mass(self) -> float:
        mass = sum(m for _, m in self.atoms)
        if self.density is not None:
            mass += self.density.density_mass
        return mass

    @classmethod
    def point(cls, location: float) -> "ConcreteLaw":
        return cls(atoms=((location, 1.0),))

    @classmethod
    def from_table(cls, table: DensityTable) -> "ConcreteLaw":
        """Renormalize a recovered table to a probability law."""
        captured = table.captured_mass
        if captured <= 0:
            raise ValidationError("Density table carries no mass")
        scaled = DensityTable(table.xs, table.rho / captured, 0.0, (), table.missing, table.notes)
        atoms = tuple((x, m / captured) for x, m in table.atom_report)
        return cls(atoms=atoms, density=scaled)


def _as_points(z: ArrayLike, dtype: type = complex) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(z, dtype=dtype)
    return arr, arr.ndim == 0


def _finish(values: np.ndarray, scalar: bool) -> ArrayLike:
    return values.item() if scalar else values


def _require_kind(t: CharTriplet, kind: Kind, operation: str) -> None:
    if t.kind is not kind:
        raise ValidationError(f"{operation} expects a {kind.value} triplet, got {t.kind.value}")


def _require_finite_small_jumps(nu: LevyMeasure, config: Optional[ToolkitConfiguration]) -> None:
    report = validate_levy(nu, config)
    if not math.isfinite(report.small_jump_abs_mean):
        raise PreconditionError(
            "Jump measure must satisfy ∫_{|x|<=1}|x|ν(dx) < ∞",
            report=report,
        )


def _integrate_over(
    nu: LevyMeasure,
    points: np.ndarray,
    make_kernel: Callable[[np.ndarray], Callable[[float], np.ndarray]],
    config: ToolkitConfiguration,
) -> np.ndarray:
    if nu.is_empty:
        return np.zeros(points.shape, dtype=complex)
    quad = config.quadrature

    def chunk(block: np.ndarray) -> np.ndarray:
        return nu.integrate(make_kernel(block), block.size, quad)

    return chunked(points, quad.chunk_size, chunk)


def cauchy_transform(mu: ConcreteLaw, z: ArrayLike) -> ArrayLike:
    """G_μ(z) = ∫ 1/(z − t) μ(dt) for Im z > 0.

    Atoms are summed exactly, the density table by the trapezoid rule.

    Raises:
        DomainError: if any point has Im z <= 0.
    """
    points, scalar = _as_points(z)
    if np.any(points.imag <= 0):
        raise DomainError("Cauchy transform is evaluated on the upper half-plane only (Im z > 0)")
    flat = points.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    for loc, mass in mu.atoms:
        out += mass / (flat - loc)
    if mu.density is not None and mu.density.xs.size > 1:
        xs, rho = mu.density.xs, mu.density.rho
        for start in range(0, flat.size, 256):
            block = flat[start:start + 256, None]
            out[start:start + 256] += trapezoid(rho / (block - xs), xs, axis=1)
    return _finish(out.reshape(points.shape), scalar)


def _free_kernel(block: np.ndarray) -> Callable[[float], np.ndarray]:
    def kernel(x: float) -> np.ndarray:
        xz = x * block
        if abs(x) <= 1.0:
            return xz * xz / (1.0 - xz)
        return xz / (1.0 - xz)

    return kernel


def free_cumulant_transform(
    t: CharTriplet,
    z: ArrayLike,
    config: Optional[ToolkitConfiguration] = None,
) -> ArrayLike:
    """C(z) = ηz + az² + ∫(1/(1−xz) − 1 − xz·1_{|x|<=1}) ν(dx), Im z < 0.

    Raises:
        DomainError: if any point has Im z >= 0.
        NumericalError: if quadrature does not converge.
    """
    _require_kind(t, Kind.FREE, "free_cumulant_transform")
    cfg = resolve(config)
    points, scalar = _as_points(z)
    if np.any(points.imag >= 0):
        raise DomainError("Free cumulant transform is evaluated on the lower half-plane only (Im z < 0)")
    values = t.eta * points + t.a * points**2
    values = values + _integrate_over(t.nu, points, _free_kernel, cfg)
    return _finish(values, scalar)


def classical_exponent(
    t: CharTriplet,
    r: ArrayLike,
    config: Optional[ToolkitConfiguration] = None,
) -> ArrayLike:
    """ψ(r) = iηr − (a/2)r² + ∫(e^{irx} − 1 − irx·1_{|x|<=1}) ν(dx).

    The characteristic function of the classical law is exp(ψ(r)).
    """
    _require_kind(t, Kind.CLASSICAL, "classical_exponent")
    cfg = resolve(config)
    points, scalar = _as_points(r, dtype=float)
    values = 1j * t.eta * points - 0.5 * t.a * points**2
    values = values + t.nu.classical_exponent(points, cfg.quadrature)
    return _finish(values, scalar)


def drift_cumulant_transform(
    nuE_mass: float,
    nu_B: LevyMeasure,
    r: ArrayLike,
    config: Optional[ToolkitConfiguration] = None,
) -> ArrayLike:
    """λ·∫(e^{irx} − 1) ν_B(dx), the cumulant transform of a Poisson integral.

    Equals ``classical_exponent`` of (0, λ∫_{|x|<=1}x ν_B, λν_B).

    Raises:
        PreconditionError: if ν_B has an infinite small-jump mean.
    """
    cfg = resolve(config)
    points, scalar = _as_points(r, dtype=float)
    if nuE_mass == 0.0:
        return _finish(np.zeros(points.shape, dtype=complex), scalar)
    _require_finite_small_jumps(nu_B, cfg)
    compensator = 1j * points * nu_B.unit_first_moment()
    values = nuE_mass * (nu_B.classical_exponent(points, cfg.quadrature) + compensator)
    return _finish(values, scalar)


def _poisson_kernel(block: np.ndarray) -> Callable[[float], np.ndarray]:
    def kernel(x: float) -> np.ndarray:
        xz = x * block
        return xz / (1.0 - xz)

    return kernel


def poisson_cumulant_transform(
    nuE_mass: float,
    nu_B: LevyMeasure,
    z: ArrayLike,
    config: Optional[ToolkitConfiguration] = None,
) -> ArrayLike:
    """λ·∫(1/(1−zx) − 1) ν_B(dx), Im z < 0: the uncompensated free Poisson integral."""
    cfg = resolve(config)
    points, scalar = _as_points(z)
    if np.any(points.imag >= 0):
        raise DomainError("Free cumulant transform is evaluated on the lower half-plane only (Im z < 0)")
    if nuE_mass == 0.0:
        return _finish(np.zeros(points.shape, dtype=complex), scalar)
    _require_finite_small_jumps(nu_B, cfg)
    values = nuE_mass * _integrate_over(nu_B, points, _poisson_kernel, cfg)
    return _finish(values, scalar)


def voiculescu_transform(
    t: CharTriplet,
    u: ArrayLike,
    config: Optional[ToolkitConfiguration] = None,
) -> ArrayLike:
    """φ(u) = u·C(1/u) for Im u > 0."""
    points, scalar = _as_points(u)
    if np.any(points.imag <= 0):
        raise DomainError("Voiculescu transform is evaluated on the upper half-plane only (Im u > 0)")
    values = points * np.asarray(free_cumulant_transform(t, 1.0 / points, config))
    return _finish(values, scalar)


def inverse_reciprocal_cauchy(
    t: CharTriplet,
    u: ArrayLike,
    config: Optional[ToolkitConfiguration] = None,
) -> ArrayLike:
    """F⁻¹(u) = u + φ(u) = u(1 + C(1/u))."""
    points, scalar = _as_points(u)
    values = points + np.asarray(voiculescu_transform(t, points, config))
    return _finish(values, scalar)
