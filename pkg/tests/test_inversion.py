"""Density recovery: the F-inverse solver, Stieltjes and Fourier inversion."""

import math

import numpy as np
import pytest

from freecrm.core import inversion
from freecrm.core.inversion import (
    SolveDiagnostics,
    cauchy_from_triplet,
    classical_density,
    default_grid,
    free_density,
    ks_between,
    mass_below,
    solve_F,
)
from freecrm.core.levy import CharTriplet, ExponentialDensity, Kind, LevyMeasure
from freecrm.core.tables import DensityTable, EmpiricalSpectrum, GridSpec
from freecrm.core.transforms import ConcreteLaw, cauchy_transform
from freecrm.exceptions import DomainError, NumericalError, ParseError, ValidationError


def semicircle_cauchy(zeta):
    return (zeta - np.sqrt(zeta - 2.0) * np.sqrt(zeta + 2.0)) / 2.0


def semicircle_pdf(x):
    return np.sqrt(np.maximum(4.0 - x * x, 0.0)) / (2.0 * math.pi)


@pytest.fixture(scope="module")
def semicircle_table():
    return free_density(CharTriplet(a=1.0), GridSpec(-3.0, 3.0, 601))


def test_solve_F_matches_semicircle_cauchy_transform(semicircle):
    for zeta in (0.5 + 1.0j, -1.7 + 0.01j, 3.0 + 0.2j):
        u, diag = solve_F(semicircle, zeta)
        assert diag.converged
        assert 1.0 / u == pytest.approx(semicircle_cauchy(zeta), abs=1e-8)
        assert u.imag >= zeta.imag


def test_solve_F_rejects_real_points(semicircle):
    with pytest.raises(DomainError):
        solve_F(semicircle, 1.0 + 0.0j)


def test_solve_F_reports_best_residual_on_iteration_cap(semicircle, config):
    config.solver.max_iter = 1
    with pytest.raises(NumericalError) as excinfo:
        solve_F(semicircle, 0.5 + 0.01j, config)
    assert excinfo.value.best_residual > 0.0


def test_free_density_of_semicircle(semicircle_table):
    xs = semicircle_table.xs
    inner = np.abs(xs) <= 1.9
    error = np.abs(semicircle_table.rho[inner] - semicircle_pdf(xs[inner]))
    assert error.max() <= 2e-3
    assert semicircle_table.captured_mass == pytest.approx(1.0, abs=5e-3)
    assert semicircle_table.atom_report == ()


def test_recovered_table_reproduces_the_cauchy_transform(semicircle, semicircle_table):
    rng = np.random.default_rng(7)
    zetas = rng.uniform(-3.0, 3.0, 20) + 1j * rng.uniform(0.5, 2.0, 20)
    recovered = cauchy_transform(ConcreteLaw.from_table(semicircle_table), zetas)
    np.testing.assert_allclose(recovered, cauchy_from_triplet(semicircle, zetas), atol=1e-3)


def test_free_poisson_density_matches_marchenko_pastur(free_poisson):
    table = free_density(free_poisson(4.0), GridSpec(0.0, 10.0, 1001))
    xs = table.xs
    inner = (xs >= 1.2) & (xs <= 8.8)
    closed_form = np.sqrt((9.0 - xs[inner]) * (xs[inner] - 1.0)) / (2.0 * math.pi * xs[inner])
    assert np.abs(table.rho[inner] - closed_form).max() <= 1e-2
    assert table.atom_mass < 1e-3


def test_free_poisson_below_rate_one_has_an_atom_at_zero(free_poisson):
    table = free_density(free_poisson(0.5), GridSpec(-1.0, 4.0, 501))
    assert len(table.atom_report) == 1
    location, mass = table.atom_report[0]
    assert location == pytest.approx(0.0, abs=1e-9)
    assert mass == pytest.approx(0.5, abs=0.05)
    assert mass_below(table, 0.05) == pytest.approx(0.5, abs=0.05)
    assert table.captured_mass == pytest.approx(1.0, abs=2e-2)


def test_free_regular_law_is_positively_supported(free_poisson):
    law = free_poisson(2.0)
    table = free_density(law, default_grid(law))
    assert mass_below(table, -1e-2) <= 1e-3


def test_point_mass_short_circuits():
    table = free_density(CharTriplet.point_mass(2.0), GridSpec(0.0, 4.0, 11))
    assert table.atom_report == ((2.0, 1.0),)
    assert table.notes == ("point_mass",)
    assert not table.rho.any()


def test_free_density_rejects_classical_triplets(semicircle):
    with pytest.raises(ValidationError):
        free_density(semicircle.with_kind(Kind.CLASSICAL), GridSpec(-3.0, 3.0, 11))


def test_free_density_is_independent_of_worker_count(semicircle, config):
    grid = GridSpec(-3.0, 3.0, 61)
    config.quadrature.chunk_size = 16
    serial = free_density(semicircle, grid, config)
    config.inversion.workers = 3
    threaded = free_density(semicircle, grid, config)
    np.testing.assert_array_equal(serial.rho, threaded.rho)


def test_unsolved_nodes_are_interpolated(semicircle, mocker):
    real_solver = inversion.solve_F_batch

    def flaky(t, zetas, u0=None, config=None):
        u, diags = real_solver(t, zetas, u0=u0, config=config)
        flagged = tuple(
            SolveDiagnostics(d.iterations, d.residual, d.converged and abs(z.real) > 1e-9)
            for z, d in zip(np.ravel(zetas), diags)
        )
        return u, flagged

    mocker.patch.object(inversion, "solve_F_batch", side_effect=flaky)
    table = free_density(semicircle, GridSpec(-3.0, 3.0, 601))
    assert table.missing == (300,)
    assert "missing_interpolated" in table.notes
    assert table.value_at(0.0) == pytest.approx(1.0 / math.pi, abs=2e-3)


def test_free_density_fails_when_most_nodes_fail(semicircle, config):
    config.solver.max_iter = 1
    with pytest.raises(NumericalError):
        free_density(semicircle, GridSpec(-3.0, 3.0, 31), config)


def test_classical_density_of_standard_normal():
    table = classical_density(CharTriplet(a=1.0, kind=Kind.CLASSICAL), GridSpec(-6.0, 6.0, 601))
    expected = np.exp(-table.xs**2 / 2.0) / math.sqrt(2.0 * math.pi)
    np.testing.assert_allclose(table.rho, expected, atol=1e-4)
    assert table.mass_deficit < 1e-3
    assert "cutoff_limited" not in table.notes


def test_classical_poisson_is_a_lattice_law(free_poisson):
    table = classical_density(free_poisson(1.0, Kind.CLASSICAL), GridSpec(-1.0, 10.0, 111))
    assert table.notes == ("discrete",)
    atoms = dict(table.atom_report)
    for k in range(6):
        assert atoms[float(k)] == pytest.approx(math.exp(-1.0) / math.factorial(k), rel=1e-12)
    assert table.mass_deficit < 1e-10


@pytest.mark.parametrize("n", [1601, 3201])
def test_classical_density_with_mixed_jumps(n):
    nu = LevyMeasure(atoms=((1.0, 0.5),), densities=(ExponentialDensity(1.0, 0.5),))
    t = CharTriplet(0.0, nu.unit_first_moment(), nu, Kind.CLASSICAL)
    table = classical_density(t, GridSpec(-2.0, 14.0, n))
    assert "mixed" in table.notes
    atoms = dict(table.atom_report)
    assert atoms[0.0] == pytest.approx(math.exp(-1.0), rel=1e-12)
    assert table.captured_mass == pytest.approx(1.0, abs=2e-2)


def test_classical_exponential_jumps_on_a_fine_grid():
    nu = LevyMeasure(densities=(ExponentialDensity(1.0, 2.0),))
    t = CharTriplet(0.5, nu.unit_first_moment(), nu, Kind.CLASSICAL)
    table = classical_density(t, GridSpec(-6.0, 20.0, 3201))
    assert np.all(np.isfinite(table.rho))
    assert table.captured_mass == pytest.approx(1.0, abs=2e-2)


@pytest.mark.parametrize("text", ["3:-3:10", "1:1:5", "-3:3:1", "-3:x:10"])
def test_grid_parse_errors(text):
    with pytest.raises(ParseError):
        GridSpec.parse(text)


def test_grid_constructor_rejects_reversed_bounds():
    with pytest.raises(ValidationError):
        GridSpec(3.0, -3.0, 10)


def test_ks_between_point_mass_and_constant_samples():
    table = free_density(CharTriplet.point_mass(2.0), GridSpec(0.0, 4.0, 11))
    samples = EmpiricalSpectrum(np.full(10, 2.0), 0, "constant")
    assert ks_between(table, samples) == 0.0


def test_ks_between_requires_complete_mass():
    xs = np.linspace(0.0, 1.0, 11)
    table = DensityTable(xs, np.full_like(xs, 0.5), 0.5)
    with pytest.raises(ValidationError):
        ks_between(table, EmpiricalSpectrum(xs, 0, "grid"))


def test_ks_between_semicircle_and_goe(semicircle_table):
    from freecrm.core.oracle import sample_goe

    assert ks_between(semicircle_table, sample_goe(1.0, 1000, 0)) <= 0.05


def test_default_grid_covers_the_semicircle(semicircle):
    grid = default_grid(semicircle)
    assert grid.lo == pytest.approx(-2.4)
    assert grid.hi == pytest.approx(2.4)
    assert grid.n == 801
