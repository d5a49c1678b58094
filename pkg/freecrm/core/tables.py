"""Value types shared by inversion and the oracle: grids, density tables, spectra."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from freecrm.exceptions import ParseError, ValidationError

_GRID_PATTERN = re.compile(r"^\s*([^:]+):([^:]+):(\d+)\s*$")


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid for density recovery.

    ``eps=None`` lets the inversion pick the Stieltjes offset from the grid
    width.
    """

    lo: float
    hi: float
    n: int
    eps: Optional[float] = None
    eps_levels: int = 2

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            raise ValidationError(f"Grid needs finite lo < hi, got {self.lo}:{self.hi}")
        if self.n < 2:
            raise ValidationError(f"Grid needs at least 2 nodes, got {self.n}")
        if self.eps is not None and not self.eps > 0:
            raise ValidationError(f"Stieltjes offset must be positive, got {self.eps}")
        if self.eps_levels < 1:
            raise ValidationError("eps_levels must be at least 1")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @classmethod
    def parse(cls, text: str, eps: Optional[float] = None, eps_levels: int = 2) -> "GridSpec":
        """Parse ``lo:hi:n``; any malformed or inconsistent string is a ``ParseError``."""
        match = _GRID_PATTERN.match(text)
        if not match:
            raise ParseError(f"Grid must look like lo:hi:n, got {text!r}")
        try:
            lo, hi = float(match.group(1)), float(match.group(2))
        except ValueError as exc:
            raise ParseError(f"Bad grid bounds in {text!r}") from exc
        try:
            return cls(lo, hi, int(match.group(3)), eps, eps_levels)
        except ValidationError as exc:
            raise ParseError(f"Bad grid {text!r}: {exc}") from exc


@dataclass(frozen=True, eq=False)
class DensityTable:
    """Recovered law: density on a grid plus reported atoms.

    ``notes`` carries flags such as ``"discrete"`` (lattice law, no density)
    or ``"cutoff_limited"`` (characteristic function not decayed at the
    Fourier cutoff).
    """

    xs: np.ndarray
    rho: np.ndarray
    mass_deficit: float
    atom_report: Tuple[Tuple[float, float], ...] = ()
    missing: Tuple[int, ...] = ()
    notes: Tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=float))
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "atom_report", tuple((float(x), float(m)) for x, m in self.atom_report))
        object.__setattr__(self, "mass_deficit", float(min(max(self.mass_deficit, 0.0), 1.0)))

    @property
    def density_mass(self) -> float:
        return float(trapezoid(self.rho, self.xs)) if self.xs.size > 1 else 0.0

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atom_report))

    @property
    def captured_mass(self) -> float:
        return self.density_mass + self.atom_mass

    def value_at(self, x: float) -> float:
        return float(np.interp(x, self.xs, self.rho, left=0.0, right=0.0))

    def cdf(self, x: np.ndarray, left_limit: bool = False) -> np.ndarray:
        """CDF of density (trapezoid-integrated) plus atoms, not renormalized.

        With ``left_limit`` atoms located exactly at ``x`` are excluded.
        """
        x = np.asarray(x, dtype=float)
        steps = np.diff(self.xs) * (self.rho[1:] + self.rho[:-1]) / 2.0
        cumulative = np.concatenate([[0.0], np.cumsum(steps)])
        out = _cumulative_at(self.xs, self.rho, cumulative, x)
        for loc, mass in self.atom_report:
            tol = 1e-9 * max(1.0, abs(loc))
            included = (x > loc + tol) if left_limit else (x >= loc - tol)
            out = out + np.where(included, mass, 0.0)
        return out


def _cumulative_at(xs: np.ndarray, rho: np.ndarray, cumulative: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Exact integral of the piecewise-linear density up to each x."""
    idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, xs.size - 2)
    x0, x1 = xs[idx], xs[idx + 1]
    y0, y1 = rho[idx], rho[idx + 1]
    t = np.clip(x, x0, x1) - x0
    slope = (y1 - y0) / (x1 - x0)
    partial = cumulative[idx] + y0 * t + slope * t * t / 2.0
    partial = np.where(x < xs[0], 0.0, partial)
    return np.where(x >= xs[-1], cumulative[-1], partial)


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Sorted eigenvalues (or scalar samples) tagged with their provenance."""

    values: np.ndarray
    seed: int
    model_tag: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.sort(np.asarray(self.values, dtype=float)))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def cdf(self, x: np.ndarray, left_limit: bool = False) -> np.ndarray:
        side = "left" if left_limit else "right"
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side=side) / max(self.n, 1)

    def moment(self, k: int) -> float:
        return float(np.mean(self.values**k))
