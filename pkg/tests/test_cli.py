"""Command-line front-end: outputs and exit codes."""

import io
import json
import math

import numpy as np
import pandas as pd
import pytest
import yaml

from freecrm.__main__ import main
from freecrm.exceptions import NumericalError

POISSON_MODEL = {
    "nu_E": {"densities": [{"family": "uniform", "lo": 0, "hi": 10, "height": 1}]},
    "nu_B": {"atoms": [[1, 1]]},
}


@pytest.fixture
def model_file(write_json):
    return write_json("model.json", POISSON_MODEL)


@pytest.fixture
def semicircle_file(write_json):
    return write_json("semicircle.json", {"kind": "free", "a": 1})


def read_table(path):
    return pd.read_csv(path, comment="#")


class TestValidate:
    def test_minimal_model(self, write_json, capsys):
        path = write_json("alpha.json", {"alpha": {"atoms": [[0.5, 2]]}})
        assert main(["validate", "--model", path]) == 0
        assert "model is valid" in capsys.readouterr().out

    def test_atom_at_zero(self, write_json, capsys):
        path = write_json("bad.json", {"nu_B": {"atoms": [[0, 1]]}})
        assert main(["validate", "--model", path]) == 3
        assert "atom at zero" in capsys.readouterr().err

    def test_power_exponent_out_of_range(self, write_json, capsys):
        path = write_json("bad.json", {"nu_B": {"densities": [{"family": "power", "p": 2.5, "c": 1}]}})
        assert main(["validate", "--model", path]) == 3
        assert "Lévy integrability" in capsys.readouterr().err

    def test_triplet(self, semicircle_file, capsys):
        assert main(["validate", "--triplet", semicircle_file]) == 0
        assert "Valid triplet" in capsys.readouterr().out

    def test_summary_as_json(self, model_file, capsys):
        assert main(["validate", "--model", model_file, "--set", "[0,2)", "--format", "json"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["wfa"] is True
        assert summary["intensity_mass"] == 2.0
        assert summary["law"]["eta"] == 2.0

    def test_parse_errors(self, tmp_path, write_json):
        assert main(["validate", "--model", str(tmp_path / "missing.json")]) == 2
        broken = tmp_path / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        assert main(["validate", "--model", str(broken)]) == 2
        assert main(["validate", "--triplet", write_json("kindless.json", {"a": 1})]) == 2


class TestLaw:
    def test_free_poisson_law(self, model_file, tmp_path):
        out = tmp_path / "t.json"
        assert main(["law", "--model", model_file, "--set", "[0,2)", "--out", str(out)]) == 0
        law = json.loads(out.read_text())
        assert law == {"kind": "free", "a": 0.0, "eta": 2.0, "nu": {"atoms": [[1.0, 2.0]], "densities": []}}

    def test_classical_law_as_yaml(self, model_file, tmp_path):
        out = tmp_path / "t.yaml"
        assert main(["law", "--model", model_file, "--set", "[0,1)", "--classical", "--out", str(out)]) == 0
        law = yaml.safe_load(out.read_text())
        assert law["kind"] == "classical"
        assert law["nu"]["atoms"] == [[1.0, 1.0]]

    def test_power_jumps_without_cutoff(self, write_json, tmp_path):
        model = {"nu_E": POISSON_MODEL["nu_E"], "nu_B": {"densities": [{"family": "power", "p": 0.5, "c": 1, "cutoff": "inf"}]}}
        path = write_json("stable.json", model)
        out = tmp_path / "t.json"
        assert main(["validate", "--model", path]) == 0
        assert main(["law", "--model", path, "--set", "[0,2)", "--out", str(out)]) == 0
        law = json.loads(out.read_text())
        assert law["nu"]["densities"][0]["cutoff"] == "inf"
        assert law["eta"] == pytest.approx(4.0)

    def test_requires_a_region(self, model_file):
        assert main(["law", "--model", model_file]) == 2
        assert main(["law", "--model", model_file, "--set", "[2,1)"]) == 2


class TestDensity:
    def test_semicircle_center(self, semicircle_file, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["density", "--triplet", semicircle_file, "--grid", "-3:3:600", "--out", str(out)]) == 0
        table = read_table(out)
        assert list(table.columns) == ["x", "density"]
        center = table.iloc[(table["x"].abs()).idxmin()]
        assert center["density"] == pytest.approx(1.0 / math.pi, abs=1e-3)

    def test_byte_identical_reruns(self, semicircle_file, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (first, second):
            assert main(["density", "--triplet", semicircle_file, "--grid", "-3:3:81", "--out", str(out)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_stdout_when_no_out(self, semicircle_file, capsys):
        assert main(["density", "--triplet", semicircle_file, "--grid=-3:3:41"]) == 0
        table = pd.read_csv(io.StringIO(capsys.readouterr().out), comment="#")
        assert len(table) == 41

    def test_grid_errors(self, semicircle_file):
        assert main(["density", "--triplet", semicircle_file, "--grid", "abc"]) == 2
        assert main(["density", "--triplet", semicircle_file, "--eps", "0.01"]) == 2
        assert main(["density", "--triplet", semicircle_file, "--grid", "3:-3:10"]) == 2
        assert main(["density", "--triplet", semicircle_file, "--grid", "-3:3:1"]) == 2

    def test_numerical_failure(self, semicircle_file, mocker):
        mocker.patch("freecrm.core.inversion.free_density", side_effect=NumericalError("no convergence"))
        assert main(["density", "--triplet", semicircle_file, "--grid", "-3:3:11"]) == 4

    @pytest.mark.parametrize("error", [OverflowError("math range error"), np.linalg.LinAlgError("singular matrix")])
    def test_arithmetic_failure(self, semicircle_file, mocker, error):
        mocker.patch("freecrm.core.inversion.free_density", side_effect=error)
        assert main(["density", "--triplet", semicircle_file, "--grid", "-3:3:11"]) == 4

    def test_rejects_monte_carlo_flags(self, semicircle_file):
        assert main(["density", "--triplet", semicircle_file, "--reps", "100"]) == 2


def test_classical_lattice_table(model_file, tmp_path):
    out = tmp_path / "c.csv"
    assert main(["classical", "--model", model_file, "--set", "[0,1)", "--grid", "-1:8:91", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    atoms = {float(x): float(m) for _, x, m in (line.split(",") for line in lines if line.startswith("# atom"))}
    assert atoms[0.0] == pytest.approx(math.exp(-1.0))
    assert atoms[2.0] == pytest.approx(math.exp(-1.0) / 2.0)
    assert "# note,discrete" in lines


class TestClassicalMonteCarlo:
    ARGS = ["classical", "--grid", "-1:12:131", "--seed", "3"]

    @staticmethod
    def reported_ks(text):
        line = next(line for line in text.splitlines() if "Monte Carlo KS" in line)
        return float(line.split("=")[1].split()[0])

    def test_reports_ks(self, model_file, tmp_path, capsys):
        kss = []
        for reps in ("50", "400"):
            out = tmp_path / f"c{reps}.csv"
            assert main(self.ARGS + ["--model", model_file, "--set", "[0,1)", "--reps", reps, "--out", str(out)]) == 0
            err = capsys.readouterr().err
            assert f"reps={reps}" in err
            kss.append(self.reported_ks(err))
        assert all(0.0 < ks < 0.5 for ks in kss)
        assert kss[0] != kss[1]

    def test_threshold_breach(self, model_file, tmp_path):
        out = tmp_path / "c.csv"
        args = self.ARGS + ["--model", model_file, "--set", "[0,1)", "--reps", "200", "--out", str(out)]
        assert main(args + ["--ks-max", "1e-9"]) == 5

    def test_triplet_samples(self, write_json, tmp_path):
        path = write_json("poisson.json", {"kind": "classical", "eta": 1, "nu": {"atoms": [[1, 1]]}})
        out = tmp_path / "c.csv"
        assert main(self.ARGS + ["--triplet", path, "--reps", "300", "--ks-max", "0.2", "--out", str(out)]) == 0


class TestOracleCompare:
    def test_requires_matrix_size(self, model_file):
        assert main(["oracle-compare", "--model", model_file, "--set", "[0,2)"]) == 2

    def test_threshold_breach(self, model_file, tmp_path):
        out = tmp_path / "cmp.csv"
        args = ["oracle-compare", "--model", model_file, "--set", "[0,2)", "--n", "100", "--seed", "1"]
        assert main(args + ["--ks-max", "0", "--out", str(out)]) == 5
        header = out.read_text().splitlines()[0]
        assert header.startswith("# ks,")
        table = read_table(out)
        assert list(table.columns) == ["x", "analytic_cdf", "empirical_cdf"]
        assert table["analytic_cdf"].iloc[-1] == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.slow
    def test_marchenko_pastur_fixture(self, model_file, capsys):
        args = ["oracle-compare", "--model", model_file, "--set", "[0,2)", "--n", "1000", "--seed", "42"]
        assert main(args + ["--ks-max", "0.05"]) == 0
        assert "KS = " in capsys.readouterr().err


class TestAdditivity:
    def test_report(self, model_file, tmp_path):
        out = tmp_path / "report.json"
        args = ["additivity", "--model", model_file, "--parts", "[0,1);[1,2)", "--coarse", "[0,2)", "--out", str(out)]
        assert main(args) == 0
        report = json.loads(out.read_text())
        assert report["exact"] is True
        assert report["parts"] == ["[0,1)", "[1,2)"]
        assert report["refinement"] == [{"coarse": "[0,2)", "fine_sets": 2, "exact": True}]
        assert report["refinement_exact"] is True
        assert report["oracle_ks"] is None

    def test_overlapping_parts(self, model_file):
        assert main(["additivity", "--model", model_file, "--parts", "[0,2);[1,3)"]) == 3

    def test_requires_parts(self, model_file):
        assert main(["additivity", "--model", model_file]) == 2


def test_unknown_command():
    assert main(["simulate"]) == 2


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "fcrm" in capsys.readouterr().out
