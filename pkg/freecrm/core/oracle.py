"""Monte Carlo ground truth for the analytic laws.

Random-matrix models whose spectra approximate free laws (GOE for the
semicircle part, sums of random rank-one projections for compound free
Poisson parts, independent Haar rotations for free sums) and a scalar
Poisson-integral sampler for the classical side.

Every random stream is a ``numpy.random.Generator(PCG64)`` seeded from
``SeedSequence(seed, spawn_key=key)``, where the key names the component or
replicate block, so output depends only on (inputs, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from freecrm.config import ToolkitConfiguration, resolve
from freecrm.core.fcrm import FcrmModel, RegionSet, region_mass
from freecrm.core.levy import CharTriplet, DensityComponent, Kind, LevyMeasure
from freecrm.core.tables import EmpiricalSpectrum
from freecrm.exceptions import PreconditionError, ValidationError
from freecrm.utils.common import translate_numpy_errors
from freecrm.utils.logger import Logger

logger = Logger.get_logger()


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for (seed, key)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


# ---------------------------------------------------------------------------
# Jump laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JumpLaw:
    """Normalized jump distribution of a finite (or truncated) Lévy measure.

    With ``truncation=δ`` only jumps with |x| >= δ are kept; ``compensation``
    is the mean ∫_{|x|<δ} x ν(dx) of the discarded small jumps.
    """

    nu: LevyMeasure
    truncation: Optional[float] = None
    _pieces: Tuple[Tuple[object, float, float, float], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        delta = self.truncation
        pieces: List[Tuple[object, float, float, float]] = []
        for loc, weight in self.nu.atoms:
            if delta is None or abs(loc) >= delta:
                pieces.append((loc, loc, loc, weight))
        for component in self.nu.densities:
            ranges = [(-math.inf, math.inf)] if delta is None else [(delta, math.inf), (-math.inf, -delta)]
            for lo, hi in ranges:
                mass = component.mass_between(lo, hi)
                if mass > 0.0:
                    pieces.append((component, lo, hi, mass))
        total = sum(p[3] for p in pieces)
        if not math.isfinite(total):
            raise ValidationError(
                "Jump measure has infinite mass; sample it with a small-jump truncation "
                "(truncation=δ, OracleConfig.truncation / FREECRM_TRUNCATION)"
            )
        object.__setattr__(self, "_pieces", tuple(pieces))

    @property
    def mass(self) -> float:
        return float(sum(p[3] for p in self._pieces))

    @property
    def compensation(self) -> float:
        if self.truncation is None:
            return 0.0
        below = math.nextafter(self.truncation, 0.0)
        return self.nu.first_moment_between(-below, below)

    @property
    def sampled_unit_moment(self) -> float:
        """∫ x ν(dx) over the kept jumps with |x| <= 1."""
        if self.truncation is None:
            return self.nu.unit_first_moment()
        delta = self.truncation
        if delta > 1.0:
            return 0.0
        return self.nu.first_moment_between(delta, 1.0) + self.nu.first_moment_between(-1.0, -delta)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(size)
        if size == 0 or not self._pieces:
            out[:] = 0.0
            return out
        weights = np.array([p[3] for p in self._pieces])
        which = rng.choice(len(self._pieces), size=size, p=weights / weights.sum())
        for k, (source, lo, hi, _) in enumerate(self._pieces):
            hits = np.flatnonzero(which == k)
            if hits.size == 0:
                continue
            if isinstance(source, DensityComponent):
                out[hits] = source.sample_between(rng, hits.size, lo, hi)
            else:
                out[hits] = source
        return out


def _jump_law_for(nu: LevyMeasure, truncation: Optional[float]) -> JumpLaw:
    """JumpLaw with truncation applied only when ν has infinite mass."""
    if math.isfinite(nu.total_mass()):
        return JumpLaw(nu)
    if truncation is None:
        return JumpLaw(nu)  # raises, naming the truncation flag
    return JumpLaw(nu, truncation)


# ---------------------------------------------------------------------------
# Matrix models
# ---------------------------------------------------------------------------


class ModelKind(str, Enum):
    GOE = "goe"
    COMPOUND_FREE_POISSON = "compound_free_poisson"
    SHIFT = "shift"
    SUM = "sum"


@dataclass(frozen=True, eq=False)
class MatrixModelSpec:
    """Finite-n matrix model of a free law."""

    kind: ModelKind
    scale: float = 0.0
    rate: float = 0.0
    jump: Optional[JumpLaw] = None
    shift: float = 0.0
    parts: Tuple["MatrixModelSpec", ...] = ()

    @classmethod
    def goe(cls, a: float) -> "MatrixModelSpec":
        if not a > 0:
            raise ValidationError(f"GOE scale must be positive, got {a}")
        return cls(ModelKind.GOE, scale=a)

    @classmethod
    def compound_free_poisson(
        cls,
        rate: float,
        jump: Union[LevyMeasure, JumpLaw],
        truncation: Optional[float] = None,
    ) -> "MatrixModelSpec":
        if not rate > 0:
            raise ValidationError(f"Poisson rate must be positive, got {rate}")
        law = jump if isinstance(jump, JumpLaw) else _jump_law_for(jump, truncation)
        if not law.mass > 0:
            raise ValidationError("Jump law carries no mass")
        return cls(ModelKind.COMPOUND_FREE_POISSON, rate=rate, jump=law)

    @classmethod
    def shifted(cls, c: float) -> "MatrixModelSpec":
        return cls(ModelKind.SHIFT, shift=c)

    @classmethod
    def sum_of(cls, specs: Sequence["MatrixModelSpec"]) -> "MatrixModelSpec":
        return cls(ModelKind.SUM, parts=tuple(specs))

    @property
    def tag(self) -> str:
        if self.kind is ModelKind.GOE:
            return f"goe({self.scale:g})"
        if self.kind is ModelKind.COMPOUND_FREE_POISSON:
            return f"cfp({self.rate:g})"
        if self.kind is ModelKind.SHIFT:
            return f"shift({self.shift:g})"
        return "+".join(p.tag for p in self.parts)


def matrix_spec_for(t: CharTriplet, truncation: Optional[float] = None) -> MatrixModelSpec:
    """Matrix model of a free triplet: GOE(a) ⊞ compound free Poisson(ν) ⊞ shift.

    The shift is the drift with the compensator of the sampled jumps removed;
    discarded small jumps contribute their mean.
    """
    parts: List[MatrixModelSpec] = []
    if t.a > 0:
        parts.append(MatrixModelSpec.goe(t.a))
    shift = t.eta
    if not t.nu.is_empty:
        law = _jump_law_for(t.nu, truncation)
        parts.append(MatrixModelSpec.compound_free_poisson(law.mass, law))
        shift = t.eta - law.sampled_unit_moment
    if shift != 0.0 or not parts:
        parts.append(MatrixModelSpec.shifted(shift))
    return parts[0] if len(parts) == 1 else MatrixModelSpec.sum_of(parts)


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar orthogonal matrix: QR of a Gaussian matrix with R's diagonal signs absorbed."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _goe_matrix(a: float, n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((n, n))
    return (x + x.T) * math.sqrt(a / (2.0 * n))


def _compound_free_poisson_matrix(rate: float, jump: JumpLaw, n: int, rng: np.random.Generator) -> np.ndarray:
    count = int(rng.poisson(rate * n))
    if count == 0:
        return np.zeros((n, n))
    sizes = jump.sample(rng, count)
    vectors = rng.standard_normal((n, count))
    vectors /= np.linalg.norm(vectors, axis=0)
    return (vectors * sizes) @ vectors.T


def _sample_matrix(spec: MatrixModelSpec, n: int, seed: int, key: Tuple[int, ...]) -> Tuple[np.ndarray, float]:
    """(random part, scalar shift) of one model; random parts of a SUM are rotated."""
    if spec.kind is ModelKind.SHIFT:
        return np.zeros((n, n)), spec.shift
    if spec.kind is ModelKind.GOE:
        return _goe_matrix(spec.scale, n, stream(seed, *key)), 0.0
    if spec.kind is ModelKind.COMPOUND_FREE_POISSON:
        return _compound_free_poisson_matrix(spec.rate, spec.jump, n, stream(seed, *key)), 0.0
    return _rotated_sum(spec.parts, n, seed, key)


def _rotated_sum(
    specs: Sequence[MatrixModelSpec], n: int, seed: int, key: Tuple[int, ...]
) -> Tuple[np.ndarray, float]:
    total = np.zeros((n, n))
    shift = 0.0
    rotate = False
    for i, spec in enumerate(specs):
        matrix, c = _sample_matrix(spec, n, seed, key + (i,))
        shift += c
        if spec.kind is ModelKind.SHIFT:
            continue
        if rotate:
            u = _haar_orthogonal(n, stream(seed, *key, i, 1 << 20))
            matrix = u @ matrix @ u.T
        total += matrix
        rotate = True
    return total, shift


def _spectrum(matrix: np.ndarray, shift: float) -> np.ndarray:
    return np.linalg.eigvalsh((matrix + matrix.T) / 2.0) + shift


@translate_numpy_errors
def sample_goe(a: float, n: int, seed: int) -> EmpiricalSpectrum:
    """Eigenvalues of a GOE matrix with off-diagonal variance a/n (semicircle of variance a)."""
    _require_size(n)
    values = _spectrum(_goe_matrix(a, n, stream(seed, 0)), 0.0)
    logger.info("sample_goe: a=%g n=%d seed=%d", a, n, seed)
    return EmpiricalSpectrum(values, seed, f"goe({a:g})")


@translate_numpy_errors
def sample_compound_free_poisson(
    lam: float,
    jump: Union[LevyMeasure, JumpLaw],
    n: int,
    seed: int,
    truncation: Optional[float] = None,
) -> EmpiricalSpectrum:
    """Eigenvalues of Σ_{i<=P} x_i v_i v_iᵀ with P ~ Poisson(λn), x_i from the normalized jump law."""
    _require_size(n)
    spec = MatrixModelSpec.compound_free_poisson(lam, jump, truncation)
    values = _spectrum(_compound_free_poisson_matrix(spec.rate, spec.jump, n, stream(seed, 0)), 0.0)
    logger.info("sample_compound_free_poisson: lambda=%g n=%d seed=%d", lam, n, seed)
    return EmpiricalSpectrum(values, seed, spec.tag)


@translate_numpy_errors
def free_add_oracle(specs: Sequence[MatrixModelSpec], n: int, seed: int) -> EmpiricalSpectrum:
    """Spectrum of A₁ + U₂A₂U₂ᵀ + ... with independent Haar orthogonal U_i.

    Scalar shifts are added as c·I without rotation.
    """
    _require_size(n)
    matrix, shift = _rotated_sum(specs, n, seed, ())
    values = _spectrum(matrix, shift)
    tag = "+".join(s.tag for s in specs) or "empty"
    logger.info("free_add_oracle: %s n=%d seed=%d", tag, n, seed)
    return EmpiricalSpectrum(values, seed, tag)


def _require_size(n: int) -> None:
    if n < 2:
        raise ValidationError(f"Matrix size must be at least 2, got {n}")


# ---------------------------------------------------------------------------
# Classical samplers
# ---------------------------------------------------------------------------


def _compound_poisson_sums(
    rate: float,
    law: JumpLaw,
    reps: int,
    seed: int,
    key: Tuple[int, ...],
    block_size: int,
) -> np.ndarray:
    sums = np.zeros(reps)
    for b, start in enumerate(range(0, reps, block_size)):
        size = min(block_size, reps - start)
        rng = stream(seed, *key, b)
        counts = rng.poisson(rate * law.mass, size)
        jumps = law.sample(rng, int(counts.sum()))
        owners = np.repeat(np.arange(size), counts)
        sums[start:start + size] = np.bincount(owners, weights=jumps, minlength=size)
    return sums


def sample_classical_L(
    model: FcrmModel,
    E: RegionSet,
    reps: int,
    seed: int,
    truncation: Optional[float] = None,
    config: Optional[ToolkitConfiguration] = None,
) -> EmpiricalSpectrum:
    """Samples of α(E) + ∫_{E×ℝ⁺} x N(dt, dx) for a Poisson random measure N.

    The jump count is Poisson(ν_E(E)·ν_B(ℝ)); jump sizes follow ν_B/ν_B(ℝ).
    With ``truncation=δ`` jumps below δ are dropped and their mean added back.

    Raises:
        PreconditionError: if the model has fixed atoms.
        ValidationError: if ν_B has infinite mass and no truncation is given.
    """
    cfg = resolve(config)
    if not model.is_wfa:
        raise PreconditionError("The classical Poisson integral is defined for models without fixed atoms")
    if reps < 1:
        raise ValidationError("reps must be positive")
    alpha = region_mass(model.alpha, E)
    lam = region_mass(model.nu_E, E)
    values = np.full(reps, alpha)
    if lam > 0.0 and not model.nu_B.is_empty:
        law = _jump_law_for(model.nu_B, truncation)
        values += _compound_poisson_sums(lam, law, reps, seed, (0,), cfg.oracle.block_size)
        values += lam * law.compensation
    logger.info("sample_classical_L: E=%s reps=%d seed=%d", E, reps, seed)
    return EmpiricalSpectrum(values, seed, f"classical_L{E}")


def sample_classical_triplet(
    t: CharTriplet,
    reps: int,
    seed: int,
    key: Tuple[int, ...] = (),
    truncation: Optional[float] = None,
    config: Optional[ToolkitConfiguration] = None,
) -> np.ndarray:
    """Samples of the classical ID law (a, η, ν): Gaussian + compound Poisson + drift."""
    if t.kind is not Kind.CLASSICAL:
        raise ValidationError(f"sample_classical_triplet expects a classical triplet, got {t.kind.value}")
    cfg = resolve(config)
    values = np.full(reps, t.eta)
    if t.a > 0:
        values += math.sqrt(t.a) * stream(seed, *key, 0).standard_normal(reps)
    if not t.nu.is_empty:
        law = _jump_law_for(t.nu, truncation)
        values += _compound_poisson_sums(1.0, law, reps, seed, key + (1,), cfg.oracle.block_size)
        values -= law.sampled_unit_moment
    return values
