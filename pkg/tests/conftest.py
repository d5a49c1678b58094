"""Shared fixtures for the freecrm test-suite."""

import json

import pytest

from freecrm.config import ToolkitConfiguration, set_configuration
from freecrm.core.fcrm import BaseMeasure, FcrmModel
from freecrm.core.levy import CharTriplet, Kind, LevyMeasure


@pytest.fixture(autouse=True)
def default_configuration():
    """Every test starts from the built-in defaults, not the caller's environment."""
    set_configuration(ToolkitConfiguration())
    yield
    set_configuration(None)


@pytest.fixture
def config():
    return ToolkitConfiguration()


@pytest.fixture
def semicircle():
    return CharTriplet(a=1.0)


@pytest.fixture
def free_poisson():
    """Factory for the free Poisson triplet (0, λ, λδ₁)."""

    def make(lam: float, kind: Kind = Kind.FREE) -> CharTriplet:
        return CharTriplet(0.0, lam, LevyMeasure.point(1.0, lam), kind)

    return make


@pytest.fixture
def poisson_model():
    """Unit jumps at Lebesgue intensity on [0, 10)."""
    return FcrmModel(nu_E=BaseMeasure.lebesgue(0.0, 10.0), nu_B=LevyMeasure.point(1.0))


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path as a string."""

    def write(name: str, data) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return write
