"""Lévy measures, characteristic triplets and triplet algebra.

A Lévy measure is carried as a finite list of atoms plus parametric density
components (uniform, exponential, power-law, tabulated). The same triplet
shape (a, η, ν) serves classical and free infinitely divisible laws; the
``kind`` tag says which world a triplet lives in. Both worlds use the
truncation 1_{|x|<=1} in the compensator.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, ClassVar, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gamma

from freecrm.config import QuadratureConfig, ToolkitConfiguration, resolve
from freecrm.constants import ATOM_MERGE_TOL, TRIPLET_TOL
from freecrm.core.quadrature import Segment, chunked, integrate_scalar, integrate_segments, linear_segments
from freecrm.exceptions import NumericalError, PreconditionError, ValidationError
from freecrm.utils.logger import Logger

logger = Logger.get_logger()


class Kind(str, Enum):
    """World a characteristic triplet belongs to."""

    CLASSICAL = "classical"
    FREE = "free"


class Family(str, Enum):
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"
    POWER = "power"
    TABULATED = "tabulated"


class Side(str, Enum):
    """Half-line carrying a one-sided density."""

    POSITIVE = "+"
    NEGATIVE = "-"

    @property
    def sign(self) -> float:
        return 1.0 if self is Side.POSITIVE else -1.0


# Largest log|x| a power-law segment is integrated to; e^345 ~ 1e150 keeps x·z finite.
_LOG_X_MAX = 345.0
# Power tails are cut where the remaining mass drops below e^-40.
_TAIL_DIGITS = 40.0


def _fourier_kernel(frequencies: np.ndarray) -> Callable[[float], np.ndarray]:
    """Kernel x -> e^{irx} − 1 − irx·1_{|x|<=1} over a block of frequencies."""

    def kernel(x: float) -> np.ndarray:
        rx = frequencies * x
        real = -2.0 * np.sin(rx / 2.0) ** 2
        imag = np.sin(rx)
        if abs(x) <= 1.0:
            # sin(rx) − rx cancels for small rx
            rx2 = rx * rx
            series = -rx * rx2 / 6.0 * (1.0 - rx2 / 20.0 * (1.0 - rx2 / 42.0))
            imag = np.where(np.abs(rx) < 1e-2, series, imag - rx)
        return real + 1j * imag

    return kernel


def _abs_range(side: Side, lo: float, hi: float) -> Tuple[float, float]:
    """Map [lo, hi] intersected with the side's half-line to an |x|-interval."""
    if side is Side.POSITIVE:
        return max(lo, 0.0), max(hi, 0.0)
    return max(-hi, 0.0), max(-lo, 0.0)


# ---------------------------------------------------------------------------
# Density components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityComponent(ABC):
    """One parametric piece of a Lévy (or base) measure density."""

    family: ClassVar[Family]

    @abstractmethod
    def density_at(self, x: float) -> float:
        """Scalar density value."""

    def pdf(self, x: Union[float, np.ndarray]) -> np.ndarray:
        """Vectorized density."""
        return np.vectorize(self.density_at, otypes=[float])(x)

    @abstractmethod
    def mass_between(self, lo: float, hi: float) -> float:
        """Closed-form measure of [lo, hi]."""

    @abstractmethod
    def first_moment_between(self, lo: float, hi: float) -> float:
        """Closed-form ∫_[lo, hi] x ν(dx)."""

    @abstractmethod
    def segments(self) -> Tuple[Segment, ...]:
        """Quadrature segments split at |x| = 1."""

    @abstractmethod
    def check(self) -> List[str]:
        """Structural violations as messages (empty when admissible)."""

    @abstractmethod
    def sample_between(self, rng: np.random.Generator, size: int, lo: float, hi: float) -> np.ndarray:
        """Draw from the component restricted to [lo, hi] (normalized)."""

    @property
    @abstractmethod
    def amplitude(self) -> float:
        """Linear scale factor of the component."""

    @abstractmethod
    def shape_key(self) -> tuple:
        """Everything except the amplitude; equal keys merge by adding amplitudes."""

    @abstractmethod
    def with_amplitude(self, amplitude: float) -> "DensityComponent":
        ...

    @abstractmethod
    def is_positive(self) -> bool:
        """True when the support lies in [0, ∞)."""

    def total_mass(self) -> float:
        return self.mass_between(-math.inf, math.inf)

    def tail_mass(self, radius: float) -> float:
        """Mass of {|x| > radius}."""
        return self.mass_between(radius, math.inf) + self.mass_between(-math.inf, -radius)

    def closed_form_min_x2(self) -> Optional[float]:
        """∫ min{x², 1} in closed form, None when the family has none."""
        return None

    def closed_form_small_jump_abs_mean(self) -> Optional[float]:
        """∫_{|x|<=1} |x| in closed form, None when the family has none."""
        return None

    def classical_exponent(self, r: np.ndarray, config: QuadratureConfig) -> np.ndarray:
        """∫(e^{irx} − 1 − irx·1_{|x|<=1}) f(x) dx at real frequencies ``r``.

        Adaptive quadrature; families with a closed form override it.
        """
        r = np.asarray(r, dtype=float)
        segments = self.segments()

        def block(values: np.ndarray) -> np.ndarray:
            return integrate_segments(segments, _fourier_kernel(values), values.size, config)

        return chunked(r, config.chunk_size, block)


@dataclass(frozen=True)
class UniformDensity(DensityComponent):
    """Constant ``height`` on [lo, hi]."""

    lo: float
    hi: float
    height: float

    family: ClassVar[Family] = Family.UNIFORM

    def density_at(self, x: float) -> float:
        return self.height if self.lo <= x <= self.hi else 0.0

    def mass_between(self, lo: float, hi: float) -> float:
        return self.height * max(0.0, min(hi, self.hi) - max(lo, self.lo))

    def first_moment_between(self, lo: float, hi: float) -> float:
        a, b = max(lo, self.lo), min(hi, self.hi)
        if b <= a:
            return 0.0
        return self.height * (b * b - a * a) / 2.0

    def segments(self) -> Tuple[Segment, ...]:
        return linear_segments(self.lo, self.hi, self.density_at)

    def check(self) -> List[str]:
        problems = []
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            problems.append(f"UNIFORM needs finite lo < hi, got [{self.lo}, {self.hi}]")
        if not math.isfinite(self.height) or self.height < 0:
            problems.append(f"UNIFORM height must be a nonnegative number, got {self.height}")
        return problems

    def sample_between(self, rng: np.random.Generator, size: int, lo: float, hi: float) -> np.ndarray:
        return rng.uniform(max(lo, self.lo), min(hi, self.hi), size)

    @property
    def amplitude(self) -> float:
        return self.height

    def shape_key(self) -> tuple:
        return (self.family, self.lo, self.hi)

    def with_amplitude(self, amplitude: float) -> "UniformDensity":
        return replace(self, height=amplitude)

    def is_positive(self) -> bool:
        return self.lo >= 0.0

    def closed_form_min_x2(self) -> float:
        def antiderivative(x: float) -> float:
            if abs(x) <= 1.0:
                return x**3 / 3.0
            return x - math.copysign(2.0 / 3.0, x)

        return self.height * (antiderivative(self.hi) - antiderivative(self.lo))

    def closed_form_small_jump_abs_mean(self) -> float:
        a, b = max(self.lo, -1.0), min(self.hi, 1.0)
        if b <= a:
            return 0.0

        def antiderivative(x: float) -> float:
            return math.copysign(x * x / 2.0, x)

        return self.height * (antiderivative(b) - antiderivative(a))

    def classical_exponent(self, r: np.ndarray, config: QuadratureConfig) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        a, b = self.lo, self.hi
        # short series where (e^{irb} − e^{ira})/(ir) − (b − a) cancels
        small = np.abs(r) * max(abs(a), abs(b)) < 1e-3
        safe = np.where(small, 1.0, r)
        exact = (np.exp(1j * safe * b) - np.exp(1j * safe * a)) / (1j * safe) - (b - a)
        series = (1j * r * (b**2 - a**2) / 2.0 - r**2 * (b**3 - a**3) / 6.0
                  - 1j * r**3 * (b**4 - a**4) / 24.0)
        body = self.height * np.where(small, series, exact)
        return body - 1j * r * self.first_moment_between(-1.0, 1.0)


@dataclass(frozen=True)
class ExponentialDensity(DensityComponent):
    """``scale * exp(-rate * |x|)`` on one half-line."""

    rate: float
    scale: float
    side: Side = Side.POSITIVE

    family: ClassVar[Family] = Family.EXPONENTIAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "side", Side(self.side))

    def density_at(self, x: float) -> float:
        y = self.side.sign * x
        return self.scale * math.exp(-self.rate * y) if y >= 0.0 else 0.0

    def mass_between(self, lo: float, hi: float) -> float:
        a, b = _abs_range(self.side, lo, hi)
        if b <= a:
            return 0.0
        k = self.rate
        return self.scale * (math.exp(-k * a) - math.exp(-k * b)) / k

    def first_moment_between(self, lo: float, hi: float) -> float:
        a, b = _abs_range(self.side, lo, hi)
        if b <= a:
            return 0.0
        k = self.rate

        def term(y: float) -> float:
            return 0.0 if math.isinf(y) else (y / k + 1.0 / k**2) * math.exp(-k * y)

        return self.side.sign * self.scale * (term(a) - term(b))

    def segments(self) -> Tuple[Segment, ...]:
        if self.side is Side.POSITIVE:
            return linear_segments(0.0, math.inf, self.density_at)
        return linear_segments(-math.inf, 0.0, self.density_at)

    def check(self) -> List[str]:
        problems = []
        if not math.isfinite(self.rate) or self.rate <= 0:
            problems.append(f"EXPONENTIAL rate must be positive, got {self.rate}")
        if not math.isfinite(self.scale) or self.scale < 0:
            problems.append(f"EXPONENTIAL scale must be nonnegative, got {self.scale}")
        return problems

    def sample_between(self, rng: np.random.Generator, size: int, lo: float, hi: float) -> np.ndarray:
        a, b = _abs_range(self.side, lo, hi)
        k = self.rate
        span = 1.0 if math.isinf(b) else -math.expm1(-k * (b - a))
        y = a - np.log1p(-rng.random(size) * span) / k
        return self.side.sign * y

    @property
    def amplitude(self) -> float:
        return self.scale

    def shape_key(self) -> tuple:
        return (self.family, self.rate, self.side)

    def with_amplitude(self, amplitude: float) -> "ExponentialDensity":
        return replace(self, scale=amplitude)

    def is_positive(self) -> bool:
        return self.side is Side.POSITIVE

    def closed_form_min_x2(self) -> float:
        k = self.rate
        return self.scale * (2.0 / k**3 - math.exp(-k) * (2.0 / k**2 + 2.0 / k**3))

    def closed_form_small_jump_abs_mean(self) -> float:
        k = self.rate
        return self.scale * (1.0 - math.exp(-k) * (1.0 + k)) / k**2

    def classical_exponent(self, r: np.ndarray, config: QuadratureConfig) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        k, sr = self.rate, self.side.sign * r
        body = self.scale * 1j * sr / (k * (k - 1j * sr))
        return body - 1j * r * self.first_moment_between(-1.0, 1.0)


@dataclass(frozen=True)
class PowerDensity(DensityComponent):
    """``scale * |x|^(-1-exponent)`` on 0 < |x| < cutoff, on one side.

    Integrated in the variable t = log|x|, where the weight becomes
    ``scale * exp(-exponent * t)``.
    """

    exponent: float
    scale: float
    cutoff: float = math.inf
    side: Side = Side.POSITIVE

    family: ClassVar[Family] = Family.POWER

    def __post_init__(self) -> None:
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "cutoff", float(self.cutoff))

    def density_at(self, x: float) -> float:
        y = self.side.sign * x
        if not 0.0 < y < self.cutoff:
            return 0.0
        return self.scale * y ** (-1.0 - self.exponent)

    def mass_between(self, lo: float, hi: float) -> float:
        a, b = _abs_range(self.side, lo, hi)
        b = min(b, self.cutoff)
        if b <= a:
            return 0.0
        if a == 0.0:
            return math.inf
        p = self.exponent
        tail = 0.0 if math.isinf(b) else b ** (-p)
        return self.scale * (a ** (-p) - tail) / p

    def first_moment_between(self, lo: float, hi: float) -> float:
        a, b = _abs_range(self.side, lo, hi)
        b = min(b, self.cutoff)
        if b <= a:
            return 0.0
        p = self.exponent
        if (a == 0.0 and p >= 1.0) or (math.isinf(b) and p <= 1.0):
            return self.side.sign * math.inf
        if p == 1.0:
            value = math.log(b / a)
        else:
            upper = 0.0 if math.isinf(b) else b ** (1.0 - p)
            lower = 0.0 if a == 0.0 else a ** (1.0 - p)
            value = (upper - lower) / (1.0 - p)
        return self.side.sign * self.scale * value

    def segments(self) -> Tuple[Segment, ...]:
        sign, c, p = self.side.sign, self.scale, self.exponent

        def to_x(t: float) -> float:
            return sign * math.exp(t)

        def weight(t: float) -> float:
            exponent = -p * t
            return c * math.exp(exponent) if exponent < 700.0 else math.inf

        if math.isfinite(self.cutoff):
            log_r, remainder = math.log(self.cutoff), None
        else:
            # beyond log_r only c·e^{-p t}/p of mass is left, charged at x = e^{log_r}
            log_r, remainder = _LOG_X_MAX, None
            if c > 0.0 and p > 0.0:
                log_r = min(_LOG_X_MAX, max(1.0, (math.log(c / p) + _TAIL_DIGITS) / p))
                remainder = (sign * math.exp(log_r), c * math.exp(-p * log_r) / p)
        pieces = [Segment(-math.inf, min(log_r, 0.0), to_x, weight)]
        if log_r > 0.0:
            pieces.append(Segment(0.0, log_r, to_x, weight, remainder=remainder))
        return tuple(pieces)

    def check(self) -> List[str]:
        problems = []
        if not 0.0 < self.exponent < 2.0:
            problems.append(
                f"POWER exponent p={self.exponent} outside (0, 2): "
                "Lévy integrability ∫min{x²,1}ν(dx) < ∞ fails"
            )
        if not math.isfinite(self.scale) or self.scale < 0:
            problems.append(f"POWER scale must be nonnegative, got {self.scale}")
        if not self.cutoff > 0:
            problems.append(f"POWER cutoff must be positive, got {self.cutoff}")
        return problems

    def sample_between(self, rng: np.random.Generator, size: int, lo: float, hi: float) -> np.ndarray:
        a, b = _abs_range(self.side, lo, hi)
        b = min(b, self.cutoff)
        if a <= 0.0:
            raise ValidationError("POWER jumps can only be sampled away from 0 (truncate small jumps)")
        p = self.exponent
        tail = 0.0 if math.isinf(b) else b ** (-p)
        y = (a ** (-p) - rng.random(size) * (a ** (-p) - tail)) ** (-1.0 / p)
        return self.side.sign * y

    @property
    def amplitude(self) -> float:
        return self.scale

    def shape_key(self) -> tuple:
        return (self.family, self.exponent, self.cutoff, self.side)

    def with_amplitude(self, amplitude: float) -> "PowerDensity":
        return replace(self, scale=amplitude)

    def is_positive(self) -> bool:
        return self.side is Side.POSITIVE

    def closed_form_min_x2(self) -> float:
        c, p, r = self.scale, self.exponent, self.cutoff
        m = min(r, 1.0)
        value = c * m ** (2.0 - p) / (2.0 - p)
        if r > 1.0:
            value += c * (1.0 - (0.0 if math.isinf(r) else r ** (-p))) / p
        return value

    def closed_form_small_jump_abs_mean(self) -> float:
        c, p = self.scale, self.exponent
        if p >= 1.0:
            return math.inf
        return c * min(self.cutoff, 1.0) ** (1.0 - p) / (1.0 - p)

    def classical_exponent(self, r: np.ndarray, config: QuadratureConfig) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        shape, r = r.shape, r.ravel()
        c, p, cutoff = self.scale, self.exponent, self.cutoff
        sr = self.side.sign * r
        if math.isinf(cutoff):
            return (c * _stable_exponent(sr, p)).reshape(shape)
        far = np.abs(sr) * cutoff >= _ASYMPTOTIC_TURN
        out = np.empty(r.shape, dtype=complex)
        if np.any(~far):
            out[~far] = super().classical_exponent(r[~far], config)
        if np.any(far):
            out[far] = c * (_stable_exponent(sr[far], p) - _power_tail_exponent(sr[far], p, cutoff))
        return out.reshape(shape)


# Above |r|·cutoff = 100 the tail beyond a POWER cutoff is summed asymptotically.
_ASYMPTOTIC_TURN = 100.0
_ASYMPTOTIC_TERMS = 20


def _stable_exponent(r: np.ndarray, p: float) -> np.ndarray:
    """∫_0^∞ (e^{irx} − 1 − irx·1_{x<=1}) x^{-1-p} dx for 0 < p < 2."""
    size = np.abs(r)
    if p == 1.0:
        log_size = np.log(np.where(size > 0.0, size, 1.0))
        return -0.5 * math.pi * size + 1j * r * (1.0 - np.euler_gamma - log_size)
    return gamma(-p) * size**p * np.exp(-0.5j * math.pi * p * np.sign(r)) + 1j * r / (p - 1.0)


def _power_tail_exponent(r: np.ndarray, p: float, cutoff: float) -> np.ndarray:
    """∫_cutoff^∞ (e^{irx} − 1 − irx·1_{x<=1}) x^{-1-p} dx for |r|·cutoff large.

    The oscillatory part is the integration-by-parts series
    −e^{irR} Σ_k (p+1)_k R^{-1-p-k} / (ir)^{k+1}.
    """
    ir = 1j * r
    term = -np.exp(ir * cutoff) * cutoff ** (-1.0 - p) / ir
    oscillatory = term.copy()
    for k in range(1, _ASYMPTOTIC_TERMS):
        term = term * (p + k) / (cutoff * ir)
        oscillatory = oscillatory + term
    compensated = 0.0
    if cutoff < 1.0:
        compensated = -math.log(cutoff) if p == 1.0 else (1.0 - cutoff ** (1.0 - p)) / (1.0 - p)
    return oscillatory - cutoff ** (-p) / p - ir * compensated


@dataclass(frozen=True)
class TabulatedDensity(DensityComponent):
    """Piecewise-linear density through (nodes, values), times ``scale``.

    Zero outside [nodes[0], nodes[-1]]. As a Lévy density it is also zero on
    the gap between the last negative and first positive node; with
    ``spans_origin`` (base measures) that gap is interpolated like any other
    piece and nodes may sit at 0.
    """

    nodes: Tuple[float, ...]
    values: Tuple[float, ...]
    scale: float = 1.0
    spans_origin: bool = False

    family: ClassVar[Family] = Family.TABULATED

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(float(v) for v in self.nodes))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def _pieces(self) -> Iterable[Tuple[float, float, float, float]]:
        for x0, x1, y0, y1 in zip(self.nodes[:-1], self.nodes[1:], self.values[:-1], self.values[1:]):
            if x0 < 0.0 < x1 and not self.spans_origin:
                continue
            yield x0, x1, y0, y1

    def density_at(self, x: float) -> float:
        for x0, x1, y0, y1 in self._pieces():
            if x0 <= x <= x1:
                return self.scale * (y0 + (y1 - y0) * (x - x0) / (x1 - x0))
        return 0.0

    def pdf(self, x: Union[float, np.ndarray]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        nodes, values = np.asarray(self.nodes), np.asarray(self.values)
        out = np.interp(x, nodes, values, left=0.0, right=0.0)
        negative = nodes[nodes < 0.0]
        positive = nodes[nodes > 0.0]
        if negative.size and positive.size and not self.spans_origin:
            out = np.where((x > negative[-1]) & (x < positive[0]), 0.0, out)
        return self.scale * out

    def _clipped_integrals(self, lo: float, hi: float) -> Tuple[float, float]:
        mass = moment = 0.0
        for x0, x1, y0, y1 in self._pieces():
            u, v = max(lo, x0), min(hi, x1)
            if v <= u:
                continue
            slope = (y1 - y0) / (x1 - x0)
            yu, yv = y0 + slope * (u - x0), y0 + slope * (v - x0)
            mass += (v - u) * (yu + yv) / 2.0
            moment += (v - u) * (yu * (2.0 * u + v) + yv * (u + 2.0 * v)) / 6.0
        return self.scale * mass, self.scale * moment

    def mass_between(self, lo: float, hi: float) -> float:
        return self._clipped_integrals(lo, hi)[0]

    def first_moment_between(self, lo: float, hi: float) -> float:
        return self._clipped_integrals(lo, hi)[1]

    def segments(self) -> Tuple[Segment, ...]:
        nodes = self.nodes
        if self.spans_origin:
            return linear_segments(nodes[0], nodes[-1], self.density_at, nodes[1:-1])
        negative = [v for v in nodes if v < 0.0]
        positive = [v for v in nodes if v > 0.0]
        pieces: Tuple[Segment, ...] = ()
        for block in (negative, positive):
            if len(block) >= 2:
                pieces += linear_segments(block[0], block[-1], self.density_at, block[1:-1])
        return pieces

    def check(self) -> List[str]:
        problems = []
        if len(self.nodes) < 2 or len(self.nodes) != len(self.values):
            problems.append("TABULATED needs at least two nodes and one value per node")
            return problems
        if any(b <= a for a, b in zip(self.nodes[:-1], self.nodes[1:])):
            problems.append("TABULATED nodes must be strictly increasing")
        if 0.0 in self.nodes and not self.spans_origin:
            problems.append("TABULATED node at zero")
        if any(not math.isfinite(v) for v in self.nodes + self.values):
            problems.append("TABULATED entries must be finite")
        if any(v < 0 for v in self.values) or self.scale < 0:
            problems.append("TABULATED values must be nonnegative")
        return problems

    def sample_between(self, rng: np.random.Generator, size: int, lo: float, hi: float) -> np.ndarray:
        grid = []
        for x0, x1, _, _ in self._pieces():
            u, v = max(lo, x0), min(hi, x1)
            if v > u:
                grid.append(np.linspace(u, v, 65))
        xs = np.concatenate(grid)
        dens = self.pdf(xs)
        cdf = np.concatenate([[0.0], np.cumsum(np.diff(xs) * (dens[1:] + dens[:-1]) / 2.0)])
        return np.interp(rng.random(size) * cdf[-1], cdf, xs)

    @property
    def amplitude(self) -> float:
        return self.scale

    def shape_key(self) -> tuple:
        return (self.family, self.nodes, self.values, self.spans_origin)

    def with_amplitude(self, amplitude: float) -> "TabulatedDensity":
        return replace(self, scale=amplitude)

    def is_positive(self) -> bool:
        return self.nodes[0] > 0.0

    def classical_exponent(self, r: np.ndarray, config: QuadratureConfig) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        shape, r = r.shape, r.ravel()
        pieces = list(self._pieces())
        out = np.zeros(r.shape, dtype=complex)
        if not pieces:
            return out.reshape(shape)
        # piecewise antiderivatives lose digits once r·width drops below 1
        far = np.abs(r) * min(x1 - x0 for x0, x1, _, _ in pieces) >= 1.0
        if np.any(~far):
            out[~far] = super().classical_exponent(r[~far], config)
        if np.any(far):
            rf = r[far]
            fourier = np.zeros(rf.shape, dtype=complex)
            for x0, x1, y0, y1 in pieces:
                e0, e1 = np.exp(1j * rf * x0), np.exp(1j * rf * x1)
                slope = (y1 - y0) / (x1 - x0)
                fourier += (y1 * e1 - y0 * e0) / (1j * rf) + slope * (e1 - e0) / rf**2
            out[far] = (self.scale * fourier - self.total_mass()
                        - 1j * rf * self.first_moment_between(-1.0, 1.0))
        return out.reshape(shape)


# ---------------------------------------------------------------------------
# Lévy measure
# ---------------------------------------------------------------------------


def _merge_atoms(atoms: Sequence[Tuple[float, float]], tol: float) -> Tuple[Tuple[float, float], ...]:
    merged: List[List[float]] = []
    for loc, weight in sorted(atoms):
        if merged and abs(loc - merged[-1][0]) <= tol * max(1.0, abs(loc)):
            merged[-1][1] += weight
        else:
            merged.append([loc, weight])
    return tuple((loc, weight) for loc, weight in merged if weight != 0.0)


def _merge_densities(densities: Sequence[DensityComponent]) -> Tuple[DensityComponent, ...]:
    grouped: Dict[tuple, DensityComponent] = {}
    for component in densities:
        key = component.shape_key()
        if key in grouped:
            previous = grouped[key]
            grouped[key] = previous.with_amplitude(previous.amplitude + component.amplitude)
        else:
            grouped[key] = component
    return tuple(c for c in grouped.values() if c.amplitude != 0.0)


@dataclass(frozen=True)
class LevyMeasure:
    """Atoms plus density components.

    Construction is permissive; ``validate_levy`` reports violations.

    Examples:
        >>> nu = LevyMeasure(atoms=((1.0, 2.0),))
        >>> nu.total_mass()
        2.0
    """

    atoms: Tuple[Tuple[float, float], ...] = ()
    densities: Tuple[DensityComponent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple((float(x), float(w)) for x, w in self.atoms))
        object.__setattr__(self, "densities", tuple(self.densities))

    @classmethod
    def point(cls, location: float, weight: float = 1.0) -> "LevyMeasure":
        return cls(atoms=((location, weight),))

    @property
    def is_empty(self) -> bool:
        return not self.atoms and not self.densities

    @property
    def is_atomic(self) -> bool:
        return not self.densities

    def __add__(self, other: "LevyMeasure") -> "LevyMeasure":
        if not isinstance(other, LevyMeasure):
            return NotImplemented
        return LevyMeasure(self.atoms + other.atoms, self.densities + other.densities).normalized()

    def normalized(self, tol: float = ATOM_MERGE_TOL) -> "LevyMeasure":
        """Merge atoms closer than ``tol`` and density components of equal shape."""
        return LevyMeasure(_merge_atoms(self.atoms, tol), _merge_densities(self.densities))

    def scaled(self, factor: float) -> "LevyMeasure":
        if factor == 0.0:
            return LevyMeasure()
        return LevyMeasure(
            tuple((x, w * factor) for x, w in self.atoms),
            tuple(c.with_amplitude(c.amplitude * factor) for c in self.densities),
        )

    def mass_between(self, lo: float, hi: float) -> float:
        """ν([lo, hi])."""
        mass = sum(w for x, w in self.atoms if lo <= x <= hi)
        return mass + sum(c.mass_between(lo, hi) for c in self.densities)

    def first_moment_between(self, lo: float, hi: float) -> float:
        moment = sum(x * w for x, w in self.atoms if lo <= x <= hi)
        return moment + sum(c.first_moment_between(lo, hi) for c in self.densities)

    def total_mass(self) -> float:
        return self.mass_between(-math.inf, math.inf)

    def tail_mass(self, radius: float) -> float:
        """ν({|x| > radius})."""
        mass = sum(w for x, w in self.atoms if abs(x) > radius)
        return mass + sum(c.tail_mass(radius) for c in self.densities)

    def unit_first_moment(self) -> float:
        """∫_{|x|<=1} x ν(dx), the compensator integral."""
        return self.first_moment_between(-1.0, 1.0)

    def is_positive(self) -> bool:
        """True when ν is carried by (0, ∞)."""
        return all(x > 0 for x, _ in self.atoms) and all(c.is_positive() for c in self.densities)

    def pdf(self, x: Union[float, np.ndarray]) -> np.ndarray:
        out = np.zeros(np.shape(x))
        for component in self.densities:
            out = out + component.pdf(x)
        return out

    def integrate(
        self,
        kernel,
        size: int,
        config: Optional[QuadratureConfig] = None,
        dtype: type = complex,
    ) -> np.ndarray:
        """∫ kernel(x) ν(dx) for a kernel returning an array of shape ``(size,)``.

        Atoms are summed exactly; densities go through adaptive quadrature.
        """
        config = config or resolve(None).quadrature
        total = np.zeros(size, dtype=dtype)
        for x, w in self.atoms:
            total = total + w * np.asarray(kernel(x))
        for component in self.densities:
            total = total + integrate_segments(component.segments(), kernel, size, config, dtype)
        return total

    def classical_exponent(self, r: np.ndarray, config: Optional[QuadratureConfig] = None) -> np.ndarray:
        """∫(e^{irx} − 1 − irx·1_{|x|<=1}) ν(dx) at real frequencies ``r``."""
        config = config or resolve(None).quadrature
        r = np.asarray(r, dtype=float)
        total = np.zeros(r.shape, dtype=complex)
        for x, w in self.atoms:
            total = total + w * _fourier_kernel(r)(x)
        for component in self.densities:
            total = total + component.classical_exponent(r, config)
        return total


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    min_x2_integral: float
    small_jump_abs_mean: float
    messages: Tuple[str, ...] = ()


def validate_levy(nu: LevyMeasure, config: Optional[ToolkitConfiguration] = None) -> ValidationReport:
    """Check Lévy-measure invariants and compute the two integrability integrals.

    Never raises: every violation becomes a message and ``ok=False``.
    """
    quad = resolve(config).quadrature
    return _validate_cached(nu, quad.abs_tol, quad.rel_tol, quad.limit, quad.merge_tol)


@lru_cache(maxsize=512)
def _validate_cached(nu: LevyMeasure, abs_tol: float, rel_tol: float, limit: int, merge_tol: float) -> ValidationReport:
    quad = QuadratureConfig(abs_tol=abs_tol, rel_tol=rel_tol, limit=limit, merge_tol=merge_tol)
    messages: List[str] = []

    min_x2 = 0.0
    abs_mean = 0.0
    for x, w in nu.atoms:
        if not (math.isfinite(x) and math.isfinite(w)):
            messages.append(f"non-finite atom ({x}, {w})")
            continue
        if x == 0.0:
            messages.append("atom at zero")
        if w <= 0.0:
            messages.append(f"non-positive atom weight {w} at {x}")
        min_x2 += w * min(x * x, 1.0)
        if abs(x) <= 1.0:
            abs_mean += w * abs(x)

    locations = sorted(x for x, _ in nu.atoms)
    for a, b in zip(locations[:-1], locations[1:]):
        if abs(b - a) <= merge_tol * max(1.0, abs(b)):
            messages.append(f"duplicate atom location {b}")

    for component in nu.densities:
        problems = component.check()
        if problems:
            messages.extend(problems)
            min_x2 = abs_mean = math.inf
            continue
        try:
            min_x2 += integrate_scalar(component.segments(), lambda x: min(x * x, 1.0), quad)
            if math.isinf(component.closed_form_small_jump_abs_mean() or 0.0):
                abs_mean = math.inf
            else:
                abs_mean += integrate_scalar(
                    component.segments(), lambda x: abs(x) if abs(x) <= 1.0 else 0.0, quad
                )
        except (NumericalError, ArithmeticError, ValueError) as exc:
            messages.append(f"{component.family.value} component: {exc}")
            min_x2 = math.inf

    if not math.isfinite(min_x2) and not any("integrability" in m for m in messages):
        messages.append("Lévy integrability ∫min{x²,1}ν(dx) < ∞ fails")

    report = ValidationReport(not messages, min_x2, abs_mean, tuple(messages))
    logger.debug("validate_levy: ok=%s min_x2=%.12g abs_mean=%.12g", report.ok, min_x2, abs_mean)
    return report


# ---------------------------------------------------------------------------
# Characteristic triplets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharTriplet:
    """Characteristic triplet (a, η, ν) of a classical or free ID law.

    ``a`` is the Gaussian variance, ``eta`` the drift with compensator
    x·1_{|x|<=1}, ``nu`` the Lévy measure.
    """

    a: float = 0.0
    eta: float = 0.0
    nu: LevyMeasure = field(default_factory=LevyMeasure)
    kind: Kind = Kind.FREE

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "kind", Kind(self.kind))

    @classmethod
    def zero(cls, kind: Kind = Kind.FREE) -> "CharTriplet":
        """Triplet of δ_0, the neutral element of triplet addition."""
        return cls(0.0, 0.0, LevyMeasure(), kind)

    @classmethod
    def point_mass(cls, c: float, kind: Kind = Kind.FREE) -> "CharTriplet":
        return cls(0.0, c, LevyMeasure(), kind)

    @property
    def is_point_mass(self) -> bool:
        return self.a == 0.0 and self.nu.is_empty

    def with_kind(self, kind: Kind) -> "CharTriplet":
        return replace(self, kind=Kind(kind))

    def normalized(self, tol: float = ATOM_MERGE_TOL) -> "CharTriplet":
        return replace(self, nu=self.nu.normalized(tol))

    def decompensated_drift(self) -> float:
        """η − ∫_{|x|<=1} x ν(dx); the drift when the compensator is dropped."""
        moment = self.nu.unit_first_moment()
        if not math.isfinite(moment):
            raise PreconditionError(
                "Drift cannot be decompensated: ∫_{|x|<=1}|x|ν(dx) is infinite",
                triplet=self,
            )
        return self.eta - moment

    def free_regular_violations(self, tol: float = TRIPLET_TOL) -> List[str]:
        """Reasons the triplet is not free-regular (empty list when it is)."""
        problems = []
        if self.a != 0.0:
            problems.append(f"Gaussian part a={self.a} must vanish")
        if not self.nu.is_positive():
            problems.append("Lévy measure must be carried by (0, ∞)")
        try:
            drift = self.decompensated_drift()
        except PreconditionError as exc:
            problems.append(str(exc))
        else:
            if drift < -tol:
                problems.append(f"decompensated drift {drift} is negative")
        return problems

    def isclose(self, other: "CharTriplet", tol: float = TRIPLET_TOL) -> bool:
        """Equality up to atom-merge normalization and relative tolerance ``tol``."""
        if self.kind is not other.kind:
            return False
        if not (math.isclose(self.a, other.a, rel_tol=tol, abs_tol=tol)
                and math.isclose(self.eta, other.eta, rel_tol=tol, abs_tol=tol)):
            return False
        mine, theirs = self.nu.normalized(), other.nu.normalized()
        if len(mine.atoms) != len(theirs.atoms):
            return False
        for (x1, w1), (x2, w2) in zip(mine.atoms, theirs.atoms):
            if not (math.isclose(x1, x2, rel_tol=tol, abs_tol=tol)
                    and math.isclose(w1, w2, rel_tol=tol, abs_tol=tol)):
                return False
        amps1 = {c.shape_key(): c.amplitude for c in mine.densities}
        amps2 = {c.shape_key(): c.amplitude for c in theirs.densities}
        if amps1.keys() != amps2.keys():
            return False
        return all(math.isclose(amps1[k], amps2[k], rel_tol=tol, abs_tol=tol) for k in amps1)


def triplet_add(t1: CharTriplet, t2: CharTriplet) -> CharTriplet:
    """(a₁+a₂, η₁+η₂, ν₁+ν₂): convolution (free or classical) of ID laws."""
    if t1.kind is not t2.kind:
        raise ValidationError(f"mixed kinds: {t1.kind.value} + {t2.kind.value}")
    return CharTriplet(t1.a + t2.a, t1.eta + t2.eta, t1.nu + t2.nu, t1.kind)


def triplet_sum(triplets: Iterable[CharTriplet], kind: Kind = Kind.FREE) -> CharTriplet:
    total = CharTriplet.zero(kind)
    for triplet in triplets:
        total = triplet_add(total, triplet)
    return total


def triplet_shift(t: CharTriplet, c: float) -> CharTriplet:
    """Convolution with δ_c."""
    return replace(t, eta=t.eta + c)


def require_valid(
    obj: Union[CharTriplet, LevyMeasure],
    config: Optional[ToolkitConfiguration] = None,
) -> ValidationReport:
    """Validate a triplet or measure, raising ``ValidationError`` on failure."""
    nu = obj.nu if isinstance(obj, CharTriplet) else obj
    report = validate_levy(nu, config)
    messages = list(report.messages)
    if isinstance(obj, CharTriplet):
        if not math.isfinite(obj.a) or obj.a < 0:
            messages.insert(0, f"Gaussian part must be a nonnegative number, got {obj.a}")
        if not math.isfinite(obj.eta):
            messages.insert(0, f"drift must be finite, got {obj.eta}")
    if messages:
        raise ValidationError("; ".join(messages), report=report, messages=messages)
    return report
