"""End-to-end properties over randomized models, and the random-matrix fixtures.

Heavier cases are marked ``slow``; run them with ``pytest -m slow``.
"""

import numpy as np
import pytest

from freecrm.core.bijection import bp_map, check_homomorphism
from freecrm.core.fcrm import (
    BaseMeasure,
    FcrmModel,
    FixedAtom,
    RegionSet,
    check_additivity,
    classical_counterpart_law,
    g_law,
    subordinator_path,
)
from freecrm.core.inversion import (
    cauchy_from_triplet,
    classical_density,
    default_grid,
    free_density,
    ks_between,
    mass_below,
    solve_F,
)
from freecrm.core.levy import (
    CharTriplet,
    ExponentialDensity,
    Kind,
    LevyMeasure,
    UniformDensity,
    triplet_add,
)
from freecrm.core.oracle import sample_classical_L, sample_compound_free_poisson, sample_goe
from freecrm.core.tables import GridSpec
from freecrm.core.transforms import free_cumulant_transform
from freecrm.utils.export import write_spectrum_csv

HORIZON = 5.0


def random_jumps(rng: np.random.Generator, with_density: bool) -> LevyMeasure:
    atoms = tuple(
        (float(rng.uniform(0.2, 2.5)), float(rng.uniform(0.1, 0.5))) for _ in range(rng.integers(1, 4))
    )
    densities = ()
    if with_density and rng.random() < 0.5:
        densities = (ExponentialDensity(float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.1, 1.0))),)
    return LevyMeasure(atoms, densities)


def random_model(
    rng: np.random.Generator,
    fixed_atoms: bool = True,
    jump_densities: bool = True,
) -> FcrmModel:
    """A valid model on [0, HORIZON) with positive jumps and free-regular fixed atoms."""
    alpha = BaseMeasure(
        atoms=((float(rng.uniform(0.0, HORIZON)), float(rng.uniform(0.0, 1.0))),),
        densities=(UniformDensity(0.0, HORIZON, float(rng.uniform(0.0, 0.5))),),
    )
    nu_E = BaseMeasure(
        atoms=((float(rng.uniform(0.0, HORIZON)), float(rng.uniform(0.0, 0.5))),),
        densities=(UniformDensity(0.0, HORIZON, float(rng.uniform(0.2, 1.0))),),
    )
    atoms = []
    if fixed_atoms:
        for _ in range(rng.integers(0, 3)):
            x, w = float(rng.uniform(0.2, 2.0)), float(rng.uniform(0.1, 1.0))
            atoms.append(FixedAtom(float(rng.uniform(0.0, HORIZON)), CharTriplet(0.0, x * w, LevyMeasure.point(x, w))))
    return FcrmModel(alpha, nu_E, random_jumps(rng, jump_densities), tuple(atoms))


def random_partition(rng: np.random.Generator, lo: float, hi: float, k: int):
    cuts = np.concatenate([[lo], np.sort(rng.uniform(lo, hi, k - 1)), [hi]])
    return [RegionSet.interval(float(a), float(b)) for a, b in zip(cuts[:-1], cuts[1:])]


def random_region(rng: np.random.Generator) -> RegionSet:
    a, b = np.sort(rng.uniform(0.0, HORIZON, 2))
    return RegionSet.interval(float(a), float(b))


def random_free_triplet(rng: np.random.Generator) -> CharTriplet:
    atoms = tuple(
        (float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3.0)), float(rng.uniform(0.1, 2.0)))
        for _ in range(rng.integers(0, 3))
    )
    densities = ()
    if rng.random() < 0.5:
        densities = (ExponentialDensity(float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.1, 2.0))),)
    return CharTriplet(float(rng.uniform(0.0, 2.0)), float(rng.normal()), LevyMeasure(atoms, densities))


class TestTransformProperties:
    def test_free_cumulant_of_unit_free_poisson(self, free_poisson):
        rng = np.random.default_rng(1)
        z = rng.uniform(-3.0, 3.0, 20) - 1j * rng.uniform(0.05, 3.0, 20)
        np.testing.assert_allclose(free_cumulant_transform(free_poisson(1.0), z), 1.0 / (1.0 - z) - 1.0,
                                   rtol=0.0, atol=1e-9)

    def test_free_cumulant_is_additive_in_the_triplet(self):
        rng = np.random.default_rng(2)
        z = rng.uniform(-3.0, 3.0, 8) - 1j * rng.uniform(0.1, 2.0, 8)
        for _ in range(10):
            t1, t2 = random_free_triplet(rng), random_free_triplet(rng)
            np.testing.assert_allclose(
                free_cumulant_transform(triplet_add(t1, t2), z),
                free_cumulant_transform(t1, z) + free_cumulant_transform(t2, z),
                rtol=1e-9, atol=1e-9,
            )

    def test_cauchy_transform_maps_upper_to_lower_half_plane(self):
        rng = np.random.default_rng(3)
        zetas = rng.uniform(-4.0, 4.0, 16) + 1j * rng.uniform(0.3, 3.0, 16)
        for _ in range(5):
            g = cauchy_from_triplet(random_free_triplet(rng), zetas)
            assert np.all(g.imag < 0)

    def test_solver_far_field(self):
        rng = np.random.default_rng(4)
        t = random_free_triplet(rng)
        zeta = 0.5 + 1e6j
        u, diag = solve_F(t, zeta)
        assert diag.converged
        assert abs(u - (zeta - t.eta)) / abs(zeta) <= 1e-3


def test_additivity_over_random_partitions():
    rng = np.random.default_rng(2025)
    for _ in range(100):
        model = random_model(rng)
        parts = random_partition(rng, 0.0, 3.0, 4)
        assert check_additivity(model, parts).exact


def test_subordinator_increments_add_up():
    rng = np.random.default_rng(77)
    for _ in range(50):
        model = random_model(rng, fixed_atoms=False)
        times = np.sort(rng.uniform(0.0, HORIZON, int(rng.integers(2, 7))))
        assert subordinator_path(model, [float(t) for t in times]).additive


def test_classical_counterpart_carries_the_same_data():
    rng = np.random.default_rng(9)
    for _ in range(20):
        model = random_model(rng, fixed_atoms=False)
        E = random_region(rng)
        classical = classical_counterpart_law(model, E)
        assert classical.kind is Kind.CLASSICAL
        assert bp_map(classical) == g_law(model, E)


@pytest.mark.slow
def test_classical_counterpart_matches_poisson_integral_samples():
    rng = np.random.default_rng(10)
    for i in range(20):
        model = random_model(rng, fixed_atoms=False, jump_densities=False)
        E = random_region(rng)
        law = classical_counterpart_law(model, E)
        table = classical_density(law, default_grid(law))
        assert "discrete" in table.notes
        samples = sample_classical_L(model, E, reps=10_000, seed=i)
        assert ks_between(table, samples) <= 0.02


@pytest.mark.slow
def test_free_regular_models_are_positively_supported():
    rng = np.random.default_rng(31)
    for _ in range(20):
        model = random_model(rng, jump_densities=False)
        law = g_law(model, random_region(rng))
        table = free_density(law, default_grid(law, n=401))
        assert mass_below(table, -1e-2) <= 1e-3


@pytest.mark.slow
@pytest.mark.oracle
class TestRandomMatrixFixtures:
    def test_marchenko_pastur_rate_four(self, free_poisson):
        law = free_poisson(4.0)
        table = free_density(law, default_grid(law))
        spectrum = sample_compound_free_poisson(4.0, LevyMeasure.point(1.0), 1000, seed=4)
        assert ks_between(table, spectrum) <= 0.05

    def test_atom_matches_zero_eigenvalue_fraction(self, free_poisson):
        law = free_poisson(0.5)
        table = free_density(law, default_grid(law))
        (location, mass), = [a for a in table.atom_report if abs(a[0]) < 1e-2]
        spectrum = sample_compound_free_poisson(0.5, LevyMeasure.point(1.0), 1000, seed=5)
        assert mass == pytest.approx(0.5, abs=0.05)
        assert np.mean(np.abs(spectrum.values) < 1e-6) == pytest.approx(mass, abs=0.05)

    def test_semicircle_against_goe(self, semicircle):
        table = free_density(semicircle, GridSpec(-3.0, 3.0, 601))
        assert ks_between(table, sample_goe(1.0, 1000, seed=6)) <= 0.05

    @pytest.mark.parametrize("second", [
        CharTriplet(1.0, kind=Kind.CLASSICAL),
        CharTriplet(0.0, 1.0, LevyMeasure.point(1.0), Kind.CLASSICAL),
    ], ids=["gaussian", "poisson"])
    def test_homomorphism(self, second):
        first = CharTriplet(1.0, kind=Kind.CLASSICAL)
        report = check_homomorphism(first, second, GridSpec(-5.0, 7.0, 1201), oracle_n=1000, seed=21)
        assert report.triplet_exact
        assert report.free_density_ks <= 0.05
        assert report.classical_density_ks <= 0.02


def test_oracle_fixtures_are_byte_identical():
    model = FcrmModel(nu_E=BaseMeasure.lebesgue(0.0, 10.0), nu_B=LevyMeasure(atoms=((0.7, 1.0), (1.3, 0.5))))
    E = RegionSet.interval(0.0, 2.0)

    def fixtures():
        return (
            write_spectrum_csv(sample_goe(1.0, 100, seed=3)),
            write_spectrum_csv(sample_compound_free_poisson(2.0, LevyMeasure.point(1.0), 100, seed=3)),
            write_spectrum_csv(sample_classical_L(model, E, reps=500, seed=3)),
        )

    assert fixtures() == fixtures()
