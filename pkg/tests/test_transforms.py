"""Transforms of triplets and concrete laws, and the quadrature engine under them."""

import math

import numpy as np
import pytest

from freecrm.config import QuadratureConfig
from freecrm.core.levy import CharTriplet, ExponentialDensity, Kind, LevyMeasure, PowerDensity
from freecrm.core.quadrature import chunked, integrate_scalar, linear_segments
from freecrm.core.tables import DensityTable
from freecrm.core.transforms import (
    ConcreteLaw,
    cauchy_transform,
    classical_exponent,
    drift_cumulant_transform,
    free_cumulant_transform,
    inverse_reciprocal_cauchy,
    poisson_cumulant_transform,
    voiculescu_transform,
)
from freecrm.exceptions import DomainError, PreconditionError, ValidationError

LOWER = np.array([0.3 - 0.2j, -1.5 - 0.7j, 0.1 - 2.0j, 4.0 - 0.05j])


def test_linear_segments_integrate_a_normal_density():
    def pdf(x):
        return math.exp(-x * x / 2.0) / math.sqrt(2.0 * math.pi)

    segments = linear_segments(-math.inf, math.inf, pdf)
    assert [(s.lo, s.hi) for s in segments] == [(-math.inf, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, math.inf)]
    assert integrate_scalar(segments, lambda x: 1.0, QuadratureConfig()) == pytest.approx(1.0, abs=1e-9)


def test_chunked_keeps_shape_and_order():
    values = np.arange(10.0).reshape(2, 5)
    out = chunked(values, 3, lambda block: block * 2.0, out_dtype=float)
    np.testing.assert_array_equal(out, values * 2.0)


def test_free_cumulant_of_semicircle_is_quadratic(semicircle):
    np.testing.assert_allclose(free_cumulant_transform(semicircle, LOWER), LOWER**2)


def test_free_cumulant_of_free_poisson_is_exact(free_poisson):
    expected = 1.0 / (1.0 - LOWER) - 1.0
    np.testing.assert_allclose(free_cumulant_transform(free_poisson(1.0), LOWER), expected, rtol=1e-12)


def test_free_cumulant_scalar_in_scalar_out(free_poisson):
    value = free_cumulant_transform(free_poisson(2.0), -1j)
    assert isinstance(value, complex)
    assert value == pytest.approx(2.0 * (1.0 / (1.0 + 1j) - 1.0))


def test_free_cumulant_domain_and_kind(semicircle):
    with pytest.raises(DomainError):
        free_cumulant_transform(semicircle, 0.5 + 0.1j)
    with pytest.raises(DomainError):
        free_cumulant_transform(semicircle, 0.5)
    with pytest.raises(ValidationError):
        free_cumulant_transform(semicircle.with_kind(Kind.CLASSICAL), -1j)


def test_classical_exponent_of_poisson_and_gaussian(free_poisson):
    r = np.linspace(-5.0, 5.0, 11)
    poisson = free_poisson(1.0, Kind.CLASSICAL)
    np.testing.assert_allclose(classical_exponent(poisson, r), np.exp(1j * r) - 1.0, atol=1e-13)
    gaussian = CharTriplet(a=2.0, kind=Kind.CLASSICAL)
    np.testing.assert_allclose(classical_exponent(gaussian, r), -r**2)


def test_poisson_cumulant_equals_free_cumulant_of_compensated_triplet():
    nu_B = LevyMeasure(atoms=((2.5, 0.3),), densities=(ExponentialDensity(1.0, 1.0),))
    lam = 2.0
    compensated = CharTriplet(0.0, lam * nu_B.unit_first_moment(), nu_B.scaled(lam))
    np.testing.assert_allclose(
        poisson_cumulant_transform(lam, nu_B, LOWER),
        free_cumulant_transform(compensated, LOWER),
        rtol=1e-8,
        atol=1e-10,
    )


def test_drift_cumulant_equals_classical_exponent_of_compensated_triplet():
    nu_B = LevyMeasure(densities=(ExponentialDensity(2.0, 1.0),))
    lam = 1.5
    compensated = CharTriplet(0.0, lam * nu_B.unit_first_moment(), nu_B.scaled(lam), Kind.CLASSICAL)
    r = np.linspace(-4.0, 4.0, 9)
    np.testing.assert_allclose(
        drift_cumulant_transform(lam, nu_B, r),
        classical_exponent(compensated, r),
        rtol=1e-8,
        atol=1e-10,
    )


def test_poisson_integrals_need_finite_small_jump_mean():
    nu_B = LevyMeasure(densities=(PowerDensity(1.5, 1.0),))
    with pytest.raises(PreconditionError):
        drift_cumulant_transform(1.0, nu_B, 1.0)
    with pytest.raises(PreconditionError):
        poisson_cumulant_transform(1.0, nu_B, -1j)
    assert poisson_cumulant_transform(0.0, nu_B, -1j) == 0.0


def test_half_stable_cumulant_converges_near_the_axis():
    stable = CharTriplet(0.0, 0.0, LevyMeasure(densities=(PowerDensity(0.5, 1.0),)))
    values = free_cumulant_transform(stable, np.array([1.0 - 1e-2j, -2.0 - 1e-2j]))
    assert np.all(np.isfinite(values))


def test_cauchy_transform_of_point_mass():
    z = np.array([1.0 + 1.0j, -2.0 + 0.5j])
    np.testing.assert_allclose(cauchy_transform(ConcreteLaw.point(0.5), z), 1.0 / (z - 0.5))
    with pytest.raises(DomainError):
        cauchy_transform(ConcreteLaw.point(0.5), 1.0)


def test_cauchy_transform_of_tabulated_uniform_law():
    xs = np.linspace(0.0, 1.0, 401)
    law = ConcreteLaw(density=DensityTable(xs, np.ones_like(xs), 0.0))
    z = 0.5 + 1.0j
    assert cauchy_transform(law, z) == pytest.approx(np.log(z) - np.log(z - 1.0), rel=1e-5)


def test_concrete_law_requires_unit_mass():
    with pytest.raises(ValidationError):
        ConcreteLaw(atoms=((0.0, 0.5),))
    with pytest.raises(ValidationError):
        ConcreteLaw(atoms=((0.0, 1.5), (1.0, -0.5)))


def test_concrete_law_from_table_renormalizes():
    xs = np.linspace(0.0, 1.0, 11)
    table = DensityTable(xs, np.full_like(xs, 0.5), 0.0, ((2.0, 0.25),))
    law = ConcreteLaw.from_table(table)
    assert law.total_mass == pytest.approx(1.0)
    assert law.atoms == ((2.0, pytest.approx(1.0 / 3.0)),)


def test_reciprocal_cauchy_inverse_of_semicircle(semicircle):
    u = np.array([1.0 + 1.0j, 0.2 + 3.0j])
    np.testing.assert_allclose(inverse_reciprocal_cauchy(semicircle, u), u + 1.0 / u)
    with pytest.raises(DomainError):
        voiculescu_transform(semicircle, 1.0 - 1.0j)
