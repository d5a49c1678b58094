"""Adaptive quadrature of vector-valued kernels against Lévy density components.

Every density component describes itself as a list of ``Segment`` objects: an
integration range in some variable t, the map t -> x and the weight (density
times Jacobian). Segments are split where the compensator of the free
Lévy-Khintchine integrand has its kink (|x| = 1); power-law components are
integrated in the variable t = log|x| so the singular behaviour at 0 becomes an
exponentially decaying tail.

The engine is ``scipy.integrate.quad_vec``: one adaptive Gauss-Kronrod pass
integrates the kernel for a whole batch of evaluation points at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad_vec

from freecrm.config import QuadratureConfig
from freecrm.exceptions import NumericalError
from freecrm.utils.logger import Logger

logger = Logger.get_logger()

Kernel = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class Segment:
    """One integration range: ∫ kernel(to_x(t)) weight(t) dt over [lo, hi].

    ``remainder`` is an optional ``(x_end, mass)`` pair: the measure left beyond
    the truncated range, charged at the kernel value in ``x_end``.
    """

    lo: float
    hi: float
    to_x: Callable[[float], float]
    weight: Callable[[float], float]
    points: Tuple[float, ...] = ()
    remainder: Optional[Tuple[float, float]] = None


def linear_segments(
    lo: float,
    hi: float,
    pdf: Callable[[float], float],
    extra_points: Sequence[float] = (),
) -> Tuple[Segment, ...]:
    """Split [lo, hi] in x-space at -1, 0, 1 (where interior)."""
    cuts = sorted({lo, hi, *[c for c in (-1.0, 0.0, 1.0) if lo < c < hi]})
    segments = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b <= a:
            continue
        pts: Tuple[float, ...] = ()
        if np.isfinite(a) and np.isfinite(b):
            pts = tuple(p for p in extra_points if a < p < b)
        segments.append(Segment(a, b, _identity, pdf, pts))
    return tuple(segments)


def _identity(t: float) -> float:
    return t


def integrate_segments(
    segments: Sequence[Segment],
    kernel: Kernel,
    size: int,
    config: QuadratureConfig,
    dtype: type = complex,
) -> np.ndarray:
    """Integrate ``kernel`` (returning shape ``(size,)``) over all segments.

    Raises:
        NumericalError: when an adaptive pass does not reach the tolerance within
            the subinterval cap; carries the achieved estimate and error bound.
    """
    is_complex = np.issubdtype(np.dtype(dtype), np.complexfloating)
    width = 2 * size if is_complex else size
    zeros = np.zeros(width)

    total = np.zeros(size, dtype=dtype)
    for segment in segments:
        if not segment.hi > segment.lo:
            continue

        def integrand(t: float, segment: Segment = segment) -> np.ndarray:
            w = segment.weight(t)
            if w == 0.0 or not np.isfinite(w):
                return zeros
            x = segment.to_x(t)
            if x == 0.0:
                return zeros
            value = np.asarray(kernel(x)) * w
            if is_complex:
                return np.concatenate([value.real, value.imag])
            return value.astype(float)

        result = quad_vec(
            integrand,
            segment.lo,
            segment.hi,
            epsabs=config.abs_tol,
            epsrel=config.rel_tol,
            limit=config.limit,
            points=segment.points or None,
            full_output=True,
        )
        estimate, error, info = result
        status = getattr(info, "status", 0)
        if status != 0 or not np.all(np.isfinite(estimate)):
            raise NumericalError(
                f"Quadrature did not converge on [{segment.lo}, {segment.hi}] "
                f"(status {status}, error bound {error:.3g})",
                estimate=_fold(estimate, size, is_complex),
                error_bound=float(error),
            )
        logger.debug(
            "quad_vec [%g, %g]: %d subintervals, error %.3g",
            segment.lo, segment.hi, getattr(info, "intervals", np.empty((0,))).shape[0], error,
        )
        total = total + _fold(estimate, size, is_complex)
        if segment.remainder is not None:
            x_end, mass = segment.remainder
            if mass > 0.0:
                total = total + mass * np.asarray(kernel(x_end), dtype=dtype)
    return total


def integrate_scalar(
    segments: Sequence[Segment],
    func: Callable[[float], float],
    config: QuadratureConfig,
) -> float:
    """Real-valued convenience wrapper around ``integrate_segments``."""
    value = integrate_segments(
        segments, lambda x: np.array([func(x)]), 1, config, dtype=float
    )
    return float(value[0])


def _fold(estimate: np.ndarray, size: int, is_complex: bool) -> np.ndarray:
    estimate = np.asarray(estimate, dtype=float)
    if is_complex:
        return estimate[:size] + 1j * estimate[size:]
    return estimate


def chunked(values: np.ndarray, chunk_size: int, func: Callable[[np.ndarray], np.ndarray],
            out_dtype: Optional[type] = complex) -> np.ndarray:
    """Apply ``func`` to consecutive chunks of a flat array and concatenate."""
    flat = np.ravel(values)
    out = np.empty(flat.shape, dtype=out_dtype)
    for start in range(0, flat.size, chunk_size):
        stop = min(start + chunk_size, flat.size)
        out[start:stop] = func(flat[start:stop])
    return out.reshape(np.shape(values))
