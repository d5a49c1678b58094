"""Recover laws from characteristic triplets.

Free side: G(ζ) = 1/u where u solves F⁻¹(u) = ζ, followed by Stieltjes
inversion ρ(x) = −Im G(x + iε)/π with Richardson extrapolation in ε.
Classical side: Fourier inversion of exp(ψ) on an FFT grid, with exact
enumeration of the lattice part of compound Poisson laws.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from freecrm.config import ToolkitConfiguration, resolve
from freecrm.core.levy import CharTriplet, Kind, LevyMeasure, require_valid
from freecrm.core.tables import DensityTable, EmpiricalSpectrum, GridSpec
from freecrm.core.transforms import classical_exponent, inverse_reciprocal_cauchy
from freecrm.exceptions import DomainError, NumericalError, ValidationError
from freecrm.utils.logger import Logger

logger = Logger.get_logger()

_TAIL_LEVEL = 1e-3
_ATOM_ROUNDING = 12


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    residual: float
    converged: bool


# ---------------------------------------------------------------------------
# F-inverse solver
# ---------------------------------------------------------------------------


def solve_F_batch(
    t: CharTriplet,
    zetas: Union[complex, Sequence[complex], np.ndarray],
    u0: Optional[np.ndarray] = None,
    config: Optional[ToolkitConfiguration] = None,
) -> Tuple[np.ndarray, Tuple[SolveDiagnostics, ...]]:
    """Solve u + φ(u) = ζ for every ζ (Im ζ > 0).

    Picard steps u <- u − (F⁻¹(u) − ζ), damped once the residual grows, switch
    to safeguarded Newton once the residual is small or Picard stagnates.
    Every iterate keeps Im u >= Im ζ. Non-converged points return their best
    iterate with ``converged=False``; this function does not raise on
    non-convergence.

    Args:
        t: free triplet.
        zetas: points of the upper half-plane.
        u0: optional warm start; entries with Im u0 < Im ζ are replaced by ζ.
        config: toolkit configuration (process default when None).

    Returns:
        Tuple of the solutions (same shape as ``zetas``) and per-point diagnostics.
    """
    if t.kind is not Kind.FREE:
        raise ValidationError(f"solve_F expects a free triplet, got {t.kind.value}")
    cfg = resolve(config)
    solver = cfg.solver

    shape = np.shape(zetas)
    zeta = np.asarray(zetas, dtype=complex).ravel()
    if np.any(zeta.imag <= 0):
        raise DomainError("solve_F needs Im ζ > 0")

    u = zeta.copy()
    if u0 is not None:
        start = np.asarray(u0, dtype=complex).ravel()
        u = np.where(start.imag >= zeta.imag, start, zeta)

    scale = np.maximum(1.0, np.abs(zeta))
    quad_slack = 10.0 * cfg.quadrature.abs_tol if t.nu.densities else 0.0

    def F(v: np.ndarray) -> np.ndarray:
        return np.asarray(inverse_reciprocal_cauchy(t, v, cfg))

    def tolerance(v: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return solver.tol * scale[idx] + quad_slack * np.abs(v)

    everything = np.arange(zeta.size)
    r = F(u) - zeta
    res = np.abs(r)
    converged = res <= tolerance(u, everything)
    best_u, best_res = u.copy(), res.copy()
    iterations = np.zeros(zeta.size, dtype=int)
    damp = np.ones(zeta.size)
    newton = res <= solver.newton_switch * scale

    for _ in range(solver.max_iter):
        active = np.flatnonzero(~converged)
        if active.size == 0:
            break
        iterations[active] += 1
        ua, za, ra = u[active], zeta[active], r[active]

        candidate = ua - damp[active] * ra
        use_newton = newton[active]
        if use_newton.any():
            step = _newton_steps(F, ua[use_newton], za[use_newton], ra[use_newton], solver)
            candidate[use_newton] = np.where(np.isnan(step), candidate[use_newton], step)

        floor = za.imag - 1e-9 * scale[active]
        if np.any(candidate.imag < floor):
            raise NumericalError(
                "Fixed-point iterate left the half-plane Im u >= Im ζ",
                residual=float(np.max(res[active])),
            )
        candidate = np.where(candidate.imag < za.imag, candidate.real + 1j * za.imag, candidate)

        r_new = F(candidate) - za
        res_new = np.abs(r_new)
        grew = res_new > res[active]
        damp[active[grew]] = solver.damping
        ratio = res_new / np.maximum(res[active], np.finfo(float).tiny)
        newton[active] |= (res_new <= solver.newton_switch * scale[active]) | (ratio > 0.5)

        u[active], r[active], res[active] = candidate, r_new, res_new
        better = res_new < best_res[active]
        best_u[active[better]] = candidate[better]
        best_res[active[better]] = res_new[better]
        converged[active] = res_new <= tolerance(candidate, active)

    u = np.where(converged, u, best_u)
    res = np.where(converged, res, best_res)
    if not converged.all():
        logger.debug(
            "solve_F: %d/%d points unconverged, worst residual %.3g",
            int((~converged).sum()), zeta.size, float(res[~converged].max()),
        )
    diagnostics = tuple(
        SolveDiagnostics(int(k), float(e), bool(c)) for k, e, c in zip(iterations, res, converged)
    )
    return u.reshape(shape), diagnostics


def _newton_steps(F, u: np.ndarray, zeta: np.ndarray, r: np.ndarray, solver) -> np.ndarray:
    """Backtracked Newton candidates; NaN where no acceptable step was found."""
    h = np.minimum(solver.diff_step * np.maximum(1.0, np.abs(u)), 1e-3 * u.imag)
    derivative = (F(u + h) - F(u - h)) / (2.0 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = r / derivative
    out = np.full(u.shape, np.nan, dtype=complex)
    pending = np.isfinite(step)
    lam = 1.0
    for _ in range(solver.max_backtracks):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            break
        trial = u[idx] - lam * step[idx]
        inside = trial.imag >= zeta[idx].imag
        if inside.any():
            hit = idx[inside]
            improved = np.abs(F(trial[inside]) - zeta[hit]) < np.abs(r[hit])
            out[hit[improved]] = trial[inside][improved]
            pending[hit[improved]] = False
        lam *= 0.5
    return out


def solve_F(
    t: CharTriplet,
    zeta: complex,
    config: Optional[ToolkitConfiguration] = None,
) -> Tuple[complex, SolveDiagnostics]:
    """Scalar ``solve_F_batch``; G(ζ) = 1/u.

    Raises:
        DomainError: if Im ζ <= 0.
        NumericalError: if the iteration cap is reached, with ``best_residual``.
    """
    u, (diag,) = solve_F_batch(t, np.array([zeta]), config=config)
    if not diag.converged:
        raise NumericalError(
            f"F-inverse equation not solved at ζ={zeta} after {diag.iterations} iterations",
            best_residual=diag.residual,
            iterations=diag.iterations,
        )
    return complex(u[0]), diag


def cauchy_from_triplet(
    t: CharTriplet,
    zetas: Union[complex, np.ndarray],
    config: Optional[ToolkitConfiguration] = None,
) -> Union[complex, np.ndarray]:
    """G(ζ) of the free law with triplet ``t``."""
    u, diags = solve_F_batch(t, zetas, config=config)
    failed = [d for d in diags if not d.converged]
    if failed:
        raise NumericalError(
            f"F-inverse equation not solved at {len(failed)} point(s)",
            best_residual=max(d.residual for d in failed),
        )
    g = 1.0 / np.asarray(u)
    return complex(g) if g.ndim == 0 else g


# ---------------------------------------------------------------------------
# Free density
# ---------------------------------------------------------------------------


def default_eps(grid: GridSpec) -> float:
    return 1e-3 * max(1.0, (grid.hi - grid.lo) / 10.0)


def _richardson(values: np.ndarray) -> np.ndarray:
    """Extrapolate to ε -> 0 from rows at ε₀, 2ε₀, 4ε₀, ..."""
    table = [np.asarray(v, dtype=float) for v in values]
    for j in range(1, len(table)):
        factor = 2.0**j
        table = [(factor * table[k] - table[k + 1]) / (factor - 1.0) for k in range(len(table) - 1)]
    return table[0]


def _continuation_path(grid: GridSpec, levels: Sequence[float], ratio: float) -> List[Tuple[float, Optional[int]]]:
    path: List[Tuple[float, Optional[int]]] = []
    y = max(1.0, 0.25 * (grid.hi - grid.lo), 4.0 * levels[-1])
    while y > levels[-1]:
        path.append((y, None))
        y *= ratio
    path.extend((levels[k], k) for k in reversed(range(len(levels))))
    return path


def _solve_block(
    t: CharTriplet,
    points: np.ndarray,
    path: Sequence[Tuple[float, Optional[int]]],
    n_levels: int,
    cfg: ToolkitConfiguration,
) -> Tuple[np.ndarray, np.ndarray]:
    g = np.zeros((n_levels, points.size), dtype=complex)
    ok = np.zeros((n_levels, points.size), dtype=bool)
    u: Optional[np.ndarray] = None
    for y, level in path:
        u, diags = solve_F_batch(t, points + 1j * y, u0=u, config=cfg)
        if level is not None:
            g[level] = 1.0 / u
            ok[level] = [d.converged for d in diags]
    return g, ok


def _structural_atom(t: CharTriplet) -> Optional[float]:
    """Only possible atom of a ⊞-ID law without Gaussian part and with finite ν."""
    if t.a != 0.0 or not math.isfinite(t.nu.total_mass()):
        return None
    return t.decompensated_drift()


def _flagged_clusters(weight: np.ndarray, flagged: np.ndarray) -> List[int]:
    """Index of the largest weight in each run of consecutive flagged nodes."""
    peaks: List[int] = []
    run: List[int] = []
    for i, flag in enumerate(flagged):
        if flag:
            run.append(i)
            continue
        if run:
            peaks.append(max(run, key=lambda j: weight[j]))
            run = []
    if run:
        peaks.append(max(run, key=lambda j: weight[j]))
    return peaks


def free_density(
    t: CharTriplet,
    g: GridSpec,
    config: Optional[ToolkitConfiguration] = None,
) -> DensityTable:
    """Density and atoms of the free law with triplet ``t`` on the grid ``g``.

    Each node is solved along a continuation path of decreasing imaginary
    offsets ending at ε₀·2^k (k < eps_levels). Atoms are detected where
    −ε·Im G exceeds the atom threshold; their contribution is removed before
    the density is extrapolated to ε -> 0.

    Raises:
        NumericalError: if more than ``max_missing_fraction`` of the nodes fail.
    """
    if t.kind is not Kind.FREE:
        raise ValidationError(f"free_density expects a free triplet, got {t.kind.value}")
    cfg = resolve(config)
    inv = cfg.inversion
    require_valid(t, cfg)
    xs = g.xs

    if t.is_point_mass:
        logger.info("free_density: point mass at %g", t.eta)
        return DensityTable(xs, np.zeros_like(xs), 0.0, ((t.eta, 1.0),), notes=("point_mass",))

    eps0 = g.eps or inv.eps or default_eps(g)
    levels = [eps0 * 2.0**k for k in range(g.eps_levels)]
    structural = _structural_atom(t)
    extra = [] if structural is None else [structural]
    points = np.concatenate([xs, extra])
    path = _continuation_path(g, levels, inv.continuation_ratio)
    logger.debug("free_density: %d points, eps levels %s, %d continuation steps", points.size, levels, len(path))

    block = cfg.quadrature.chunk_size
    starts = list(range(0, points.size, block))
    with concurrent.futures.ThreadPoolExecutor(max_workers=inv.workers) as executor:
        results = list(executor.map(
            lambda s: _solve_block(t, points[s:s + block], path, len(levels), cfg), starts
        ))
    G = np.concatenate([r[0] for r in results], axis=1)
    ok = np.concatenate([r[1] for r in results], axis=1)

    n = xs.size
    good = ok[:, :n].all(axis=0)
    missing = np.flatnonzero(~good)
    if missing.size > inv.max_missing_fraction * n:
        raise NumericalError(
            f"F-inverse solve failed at {missing.size} of {n} grid points",
            missing=tuple(int(i) for i in missing),
        )

    weight = -levels[0] * G[0].imag
    candidates: List[int] = []
    if structural is not None:
        candidates.append(n)
    spacing = g.spacing
    for idx in _flagged_clusters(weight[:n], (weight[:n] > inv.atom_threshold) & good):
        if structural is not None and abs(xs[idx] - structural) <= 2.0 * spacing:
            continue
        candidates.append(idx)

    atoms: List[Tuple[float, float]] = []
    for j in candidates:
        if weight[j] <= inv.atom_threshold or not ok[:, j].all():
            continue
        mass = float(_richardson([-eps * G[k, j].imag for k, eps in enumerate(levels)]))
        if mass > inv.atom_min_mass:
            atoms.append((float(points[j]), min(mass, 1.0)))

    im_g = G[:, :n].imag.copy()
    for k, eps in enumerate(levels):
        for loc, mass in atoms:
            im_g[k] += mass * eps / ((xs - loc) ** 2 + eps**2)
    rho = _richardson(-im_g / math.pi)

    notes: List[str] = []
    if missing.size:
        rho[missing] = np.interp(xs[missing], xs[good], rho[good])
        notes.append("missing_interpolated")
        logger.warning("free_density: interpolated %d unsolved grid points", missing.size)
    rho = _clamp_negative(rho, "free_density")

    density_mass = float(trapezoid(rho, xs))
    atom_mass = sum(m for _, m in atoms)
    deficit = 1.0 - density_mass - atom_mass
    if deficit < -inv.mass_tol:
        logger.warning("free_density: recovered mass %.4f exceeds 1", density_mass + atom_mass)
    logger.info(
        "free_density: %d nodes on [%g, %g], eps0=%g, atoms=%s, mass deficit %.3g",
        n, g.lo, g.hi, eps0, atoms, deficit,
    )
    return DensityTable(xs, rho, deficit, tuple(atoms), tuple(int(i) for i in missing), tuple(notes))


def _clamp_negative(rho: np.ndarray, operation: str) -> np.ndarray:
    low = float(rho.min()) if rho.size else 0.0
    if low < -1e-6 * max(1.0, float(rho.max())):
        logger.warning("%s: clamped negative density values (min %.3g)", operation, low)
    return np.maximum(rho, 0.0)


# ---------------------------------------------------------------------------
# Classical density
# ---------------------------------------------------------------------------


def _lattice_atoms(
    drift: float,
    jumps: Sequence[Tuple[float, float]],
    tail: float,
) -> Dict[float, float]:
    """Law of drift + compound Poisson sum with atomic jump measure.

    Poisson-weighted convolution powers, stopped once the remaining Poisson
    tail is below ``tail``.
    """
    rate = sum(w for _, w in jumps)
    base = math.exp(-rate)
    law: Dict[float, float] = {round(drift, _ATOM_ROUNDING): base}
    power: Dict[float, float] = {0.0: 1.0}
    remaining = 1.0 - base
    term = base
    k = 0
    while remaining > tail and k < 10_000:
        k += 1
        nxt: Dict[float, float] = {}
        for loc, mass in power.items():
            for x, w in jumps:
                key = round(loc + x, _ATOM_ROUNDING)
                nxt[key] = nxt.get(key, 0.0) + mass * w / k
        power = {loc: m for loc, m in nxt.items() if m * base > tail * 1e-3}
        for loc, mass in power.items():
            key = round(drift + loc, _ATOM_ROUNDING)
            law[key] = law.get(key, 0.0) + base * mass
        term *= rate / k
        remaining -= term
    return law


def _fourier_density(
    cf,
    xs: np.ndarray,
    spacing: float,
    cfg: ToolkitConfiguration,
) -> Tuple[np.ndarray, bool]:
    """Density on ``xs`` from a characteristic function by one FFT.

    Returns the density and whether |cf| was still above the cutoff at the
    largest frequency.
    """
    inv = cfg.inversion
    dx = spacing / inv.fft_oversample
    width = 4.0 * (xs[-1] - xs[0])
    size = 1 << max(4, math.ceil(math.log2(max(width / dx, 16.0))))
    if size > inv.fft_max_size:
        size = inv.fft_max_size
        dx = width / size
    dr = 2.0 * math.pi / (size * dx)
    r = (np.arange(size) - size // 2) * dr
    x0 = 0.5 * (xs[0] + xs[-1]) - 0.5 * size * dx
    phi = np.asarray(cf(r), dtype=complex)
    transformed = np.fft.fft(phi * np.exp(-1j * r * x0))
    j = np.arange(size)
    density = (dr / (2.0 * math.pi)) * np.real(transformed * np.exp(1j * math.pi * j))
    grid = x0 + j * dx
    edge = max(abs(phi[0]), abs(phi[-1]))
    limited = edge > max(inv.cf_cutoff, 1e-6 * float(np.abs(phi).max()))
    logger.debug("fourier inversion: N=%d, dx=%.3g, r_max=%.3g, |cf| at edge %.3g", size, dx, r[-1], edge)
    return np.interp(xs, grid, density), limited


def classical_density(
    t: CharTriplet,
    g: GridSpec,
    config: Optional[ToolkitConfiguration] = None,
) -> DensityTable:
    """Density (and atoms) of the classical ID law with triplet ``t``.

    A compound Poisson law with atomic jumps and no Gaussian part is a lattice
    law: its atoms are enumerated exactly and the table is flagged
    ``discrete``. When jumps also have a density part the atoms are scaled by
    the probability of no density jump and the remainder is Fourier-inverted.
    """
    if t.kind is not Kind.CLASSICAL:
        raise ValidationError(f"classical_density expects a classical triplet, got {t.kind.value}")
    cfg = resolve(config)
    inv = cfg.inversion
    require_valid(t, cfg)
    xs = g.xs

    if t.is_point_mass:
        return DensityTable(xs, np.zeros_like(xs), 0.0, ((t.eta, 1.0),), notes=("point_mass",))

    nu = t.nu.normalized()
    notes: List[str] = []
    atoms: Dict[float, float] = {}
    if t.a == 0.0 and math.isfinite(nu.total_mass()):
        drift = t.decompensated_drift()
        density_mass = sum(c.total_mass() for c in nu.densities)
        lattice = _lattice_atoms(drift, nu.atoms, inv.pmf_tail)
        atoms = {loc: m * math.exp(-density_mass) for loc, m in lattice.items()}
        if not nu.densities:
            notes.append("discrete")
            atom_report = tuple(sorted(atoms.items()))
            deficit = 1.0 - sum(atoms.values())
            logger.info("classical_density: lattice law with %d atoms", len(atom_report))
            return DensityTable(xs, np.zeros_like(xs), deficit, atom_report, notes=tuple(notes))
        notes.append("mixed")

    locations = np.array(list(atoms.keys()))
    masses = np.array(list(atoms.values()))

    def continuous_cf(r: np.ndarray) -> np.ndarray:
        phi = np.exp(np.asarray(classical_exponent(t, r, cfg)))
        if locations.size:
            phi = phi - np.exp(1j * np.outer(r, locations)) @ masses
        return phi

    rho, limited = _fourier_density(continuous_cf, xs, g.spacing, cfg)
    if limited:
        notes.append("cutoff_limited")
        logger.warning("classical_density: characteristic function not decayed at the frequency cutoff")
    rho = _clamp_negative(rho, "classical_density")

    atom_report = tuple(sorted(atoms.items()))
    deficit = 1.0 - float(trapezoid(rho, xs)) - float(masses.sum() if masses.size else 0.0)
    logger.info("classical_density: %d nodes on [%g, %g], %d atoms", xs.size, g.lo, g.hi, len(atom_report))
    return DensityTable(xs, rho, deficit, atom_report, notes=tuple(notes))


# ---------------------------------------------------------------------------
# Comparison helpers
# ---------------------------------------------------------------------------


def ks_between(
    table: DensityTable,
    emp: EmpiricalSpectrum,
    config: Optional[ToolkitConfiguration] = None,
) -> float:
    """Kolmogorov-Smirnov distance between a table's CDF and an empirical CDF.

    The table CDF (trapezoid density plus atoms) is normalized by its captured
    mass. Both CDFs are compared at every distinct sample value, from the
    right and from the left.

    Raises:
        ValidationError: if the table's captured mass is off by more than
            ``mass_tol``.
    """
    cfg = resolve(config)
    mass = table.captured_mass
    if abs(mass - 1.0) > cfg.inversion.mass_tol:
        raise ValidationError(
            f"Density table mass {mass:.4f} is incomplete; widen the grid",
            captured_mass=mass,
        )
    if emp.n == 0:
        raise ValidationError("Empirical spectrum is empty")
    samples = np.sort(_snap_to_atoms(emp.values, table.atom_report))
    values = np.unique(samples)
    emp_right = np.searchsorted(samples, values, side="right") / samples.size
    emp_left = np.searchsorted(samples, values, side="left") / samples.size
    right = np.abs(table.cdf(values) / mass - emp_right)
    left = np.abs(table.cdf(values, left_limit=True) / mass - emp_left)
    return float(max(right.max(), left.max()))


def _snap_to_atoms(samples: np.ndarray, atoms: Sequence[Tuple[float, float]]) -> np.ndarray:
    """Move samples within rounding distance of an atom onto its location.

    Sums of atomic jumps land a few ulps apart depending on summation order.
    """
    if not atoms:
        return np.asarray(samples, dtype=float)
    locs = np.sort(np.array([loc for loc, _ in atoms], dtype=float))
    hi = np.clip(np.searchsorted(locs, samples), 0, locs.size - 1)
    lo = np.clip(hi - 1, 0, locs.size - 1)
    nearest = np.where(np.abs(samples - locs[lo]) < np.abs(samples - locs[hi]), locs[lo], locs[hi])
    close = np.abs(samples - nearest) <= 1e-9 * np.maximum(1.0, np.abs(nearest))
    return np.where(close, nearest, samples)


def mass_below(table: DensityTable, threshold: float) -> float:
    """Density plus atom mass strictly below ``threshold``."""
    return float(table.cdf(np.array([threshold]), left_limit=True)[0])


def tail_radius(nu: LevyMeasure, level: float = _TAIL_LEVEL) -> float:
    """Smallest R with ν({|x| > R}) <= level."""
    if nu.tail_mass(0.0) <= level:
        return 0.0
    hi = 1.0
    for _ in range(200):
        if nu.tail_mass(hi) <= level:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if nu.tail_mass(mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


def default_grid(
    t: CharTriplet,
    n: int = 801,
    config: Optional[ToolkitConfiguration] = None,
) -> GridSpec:
    """Support heuristic: center ± (2√(a + ∫_{|x|<=R} x²ν) + R), padded 20%.

    R is the radius beyond which ν carries mass below 1e-3; the center adds the
    large-jump mean ∫_{1<|x|<=R} x ν to the drift.
    """
    cfg = resolve(config)
    radius = tail_radius(t.nu)
    large_jump_mean = 0.0
    if radius > 1.0:
        above_one = math.nextafter(1.0, math.inf)
        large_jump_mean = (t.nu.first_moment_between(above_one, radius)
                           + t.nu.first_moment_between(-radius, -above_one))
    second_moment = 0.0
    if not t.nu.is_empty:
        second_moment = float(t.nu.integrate(
            lambda x: np.array([x * x if abs(x) <= radius else 0.0]), 1, cfg.quadrature, dtype=float
        )[0])
    center = t.eta + large_jump_mean
    spread = 2.0 * math.sqrt(t.a + second_moment) + radius
    if spread == 0.0:
        spread = 1.0
    pad = 0.2 * spread
    logger.debug("default_grid: center %.4g, spread %.4g, tail radius %.4g", center, spread, radius)
    return GridSpec(center - spread - pad, center + spread + pad, n)
