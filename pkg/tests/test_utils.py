"""Configuration, logging, export, formatting and schema helpers."""

import json
import math

import numpy as np
import pytest
import yaml

from freecrm.config import ToolkitConfiguration, get_configuration, set_configuration
from freecrm.core.fcrm import BaseMeasure, FcrmModel, FixedAtom
from freecrm.core.levy import (
    CharTriplet,
    ExponentialDensity,
    Kind,
    LevyMeasure,
    PowerDensity,
    Side,
    TabulatedDensity,
)
from freecrm.exceptions import (
    DomainError,
    FreeCrmError,
    NumericalError,
    ParseError,
    PreconditionError,
    ThresholdError,
    ValidationError,
)
from freecrm.utils import create_highlighted_heading, translate_numpy_errors
from freecrm.utils.export import export_data
from freecrm.utils.formatters import format_number, format_rows, format_triplet
from freecrm.utils.logger import Logger
from freecrm.utils.schema import (
    density_from_dict,
    model_from_dict,
    model_to_dict,
    parse_model,
    triplet_from_dict,
    triplet_to_dict,
)


class TestConfiguration:
    def test_defaults_are_valid(self, config):
        config.validate()
        assert config.inversion.mass_tol == 2e-2
        assert config.to_dict()["solver"]["max_iter"] == 500

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("FREECRM_WORKERS", "4")
        monkeypatch.setenv("FREECRM_SOLVER_TOL", "1e-8")
        monkeypatch.setenv("FREECRM_MAX_ITER", "many")
        config = ToolkitConfiguration.from_env()
        assert config.inversion.workers == 4
        assert config.solver.tol == 1e-8
        assert config.solver.max_iter == 500

    def test_invalid_environment_falls_back_to_defaults(self, monkeypatch):
        monkeypatch.setenv("FREECRM_WORKERS", "0")
        assert ToolkitConfiguration.from_env().inversion.workers == 1

    def test_set_configuration_validates(self):
        bad = ToolkitConfiguration()
        bad.solver.damping = 0.0
        with pytest.raises(ValidationError):
            set_configuration(bad)
        good = ToolkitConfiguration()
        good.inversion.workers = 2
        set_configuration(good)
        assert get_configuration() is good


def test_exception_context_and_exit_codes():
    err = NumericalError("solver stalled", residual=1e-3, iterations=500)
    assert err.residual == 1e-3
    assert err.context == {"residual": 1e-3, "iterations": 500}
    assert issubclass(DomainError, ValidationError)
    assert issubclass(PreconditionError, ValidationError)
    codes = [cls.exit_code for cls in (ParseError, ValidationError, NumericalError, ThresholdError)]
    assert codes == [2, 3, 4, 5]
    assert FreeCrmError("x").exit_code == 1


class TestLogger:
    def test_warnings_are_numbered(self, tmp_path):
        instance = Logger.get_instance() or Logger()
        logger = Logger.get_logger()
        log_file = tmp_path / "logs" / "run.log"
        instance.add_file_handler(str(log_file))
        handler = logger.handlers[-1]
        instance.reset_incident_counters()
        try:
            logger.warning("mass deficit %.3f", 0.5)
            logger.warning("mass deficit %.3f", 0.25)
            stats = instance.get_stats()
            assert stats["warning_count"] == 2
            assert "FileHandler" in stats["handlers"]
        finally:
            logger.removeHandler(handler)
            handler.close()
            instance.reset_incident_counters()
        text = log_file.read_text()
        assert "(incident #1) mass deficit 0.500" in text
        assert "(incident #2) mass deficit 0.250" in text

    def test_singleton(self):
        assert Logger() is Logger()
        assert Logger.get_logger() is Logger().logger


class TestExport:
    DATA = {"ks": np.float64(0.125), "parts": ("[0,1)", "[1,2)"), "sizes": np.array([1, 2])}

    def test_json(self):
        obj = json.loads(export_data(self.DATA))
        assert obj == {"ks": 0.125, "parts": ["[0,1)", "[1,2)"], "sizes": [1, 2]}

    def test_yaml_to_file(self, tmp_path):
        path = tmp_path / "out.yaml"
        text = export_data(self.DATA, "YAML", str(path))
        assert path.read_text(encoding="utf-8") == text
        assert yaml.safe_load(text)["parts"] == ["[0,1)", "[1,2)"]

    def test_yaml_numpy_scalars_and_enums(self):
        text = export_data({"ks": np.float64(0.1), "n": np.int64(3), "ok": np.bool_(True), "kind": Kind.FREE}, "yaml")
        assert yaml.safe_load(text) == {"ks": 0.1, "n": 3, "ok": True, "kind": "free"}

    def test_unsupported_format(self):
        with pytest.raises(ValidationError):
            export_data(self.DATA, "xml")


class TestFormatting:
    def test_numbers(self):
        assert format_number(math.inf) == "∞"
        assert format_number(-math.inf) == "-∞"
        assert format_number(None) == "-"
        assert format_number(1.0 / 3.0, 3) == "0.333"

    def test_triplet_tree(self):
        text = format_triplet(CharTriplet(1.0, 2.0, LevyMeasure.point(1.0, 0.5)))
        assert "free" in text
        assert "δ_1 · 0.5" in text
        assert text.splitlines()[-1].startswith("    └──")

    def test_rows(self):
        table = format_rows([["[0,1)", 2, True]], ["coarse", "fine_sets", "exact"])
        assert "coarse" in table and "|" in table

    def test_heading(self):
        heading = create_highlighted_heading("Law", total_length=40)
        assert len(heading) == 40
        assert " ◀ Law ▶ " in heading
        with pytest.raises(ValidationError):
            create_highlighted_heading("Law", total_length=10)


def test_translate_numpy_errors():
    @translate_numpy_errors
    def singular():
        raise np.linalg.LinAlgError("singular matrix")

    @translate_numpy_errors
    def invalid():
        raise ValidationError("n must be at least 2")

    @translate_numpy_errors
    def overflow():
        raise OverflowError("math range error")

    with pytest.raises(NumericalError, match="singular"):
        singular()
    with pytest.raises(NumericalError, match="OverflowError"):
        overflow()
    with pytest.raises(ValidationError):
        invalid()


class TestSchema:
    def test_model_round_trip(self):
        model = FcrmModel(
            alpha=BaseMeasure.lebesgue(0.0, 1.0, 2.0),
            nu_E=BaseMeasure(atoms=((0.5, 1.0),)),
            nu_B=LevyMeasure(
                atoms=((2.0, 0.5),),
                densities=(PowerDensity(0.5, 1.0, 3.0), ExponentialDensity(2.0, 1.0)),
            ),
            fixed_atoms=(FixedAtom(0.25, CharTriplet(0.0, 1.0, LevyMeasure.point(1.0))),),
        )
        data = json.loads(json.dumps(model_to_dict(model)))
        assert model_from_dict(data) == model

    def test_triplet_defaults(self):
        t = triplet_from_dict({"kind": "Classical", "nu": {"densities": [
            {"family": "power", "p": 0.5, "c": 1, "cutoff": None, "side": "-"},
        ]}})
        assert t.kind is Kind.CLASSICAL
        assert (t.a, t.eta) == (0.0, 0.0)
        assert t.nu.densities == (PowerDensity(0.5, 1.0, math.inf, Side.NEGATIVE),)
        assert triplet_to_dict(t)["nu"]["densities"][0]["cutoff"] == "inf"

    def test_tabulated_density(self):
        component = density_from_dict({"family": "tabulated", "nodes": [1, 2, 3], "values": [0, 1, 0]})
        assert component == TabulatedDensity((1.0, 2.0, 3.0), (0.0, 1.0, 0.0))

    @pytest.mark.parametrize("data", [
        {"family": "gamma"},
        {"family": "power", "p": "half", "c": 1},
        {"family": "power", "p": 0.5, "c": 1, "cutoff": "big"},
        {"family": "exponential", "rate": 1, "side": "left"},
        {"family": "tabulated", "nodes": [1, 2], "values": "flat"},
        [1, 2],
    ])
    def test_malformed_density(self, data):
        with pytest.raises(ParseError):
            density_from_dict(data)

    @pytest.mark.parametrize("data", [
        {"nu_B": {"atoms": [[1]]}},
        {"nu_B": {"atoms": [[True, 1]]}},
        {"alpha": {"densities": {}}},
        {"fixed_atoms": {}},
        {"fixed_atoms": [{"triplet": {"eta": 1}}]},
    ])
    def test_malformed_model(self, data):
        with pytest.raises(ParseError):
            model_from_dict(data)

    def test_fixed_atom_kind_defaults_to_free(self):
        model = model_from_dict({"fixed_atoms": [{"location": 1, "triplet": {"eta": 1}}]})
        assert model.fixed_atoms[0].law.kind is Kind.FREE

    def test_parse_model_validates(self, write_json):
        path = write_json("model.json", {"nu_B": {"atoms": [[-1, 1]]}})
        with pytest.raises(ValidationError) as excinfo:
            parse_model(path)
        assert excinfo.value.exit_code == 3
