import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resilia import cli
from resilia.analysis import run_analysis, sweep_pairs_csv, to_json
from resilia.casestudy import (
    ACTUATORS,
    DEFAULT_X0,
    TemperatureParams,
    actuator_index,
    build_temperature_system,
    temperature_matrices,
)
from resilia.errors import DimensionError, ParseError, SchemaError
from resilia.specfile import SystemSpec, dump_system, load_system, validate

SCALAR_DOC = {"n": 1, "A": [[-1]], "B_bar": [[1, 0.5]], "lost_actuators": [1], "x0": [1.0]}


def write(tmp_path, doc, name="sys.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


class TestSpecFile:
    def test_minimal(self, tmp_path):
        spec = load_system(write(tmp_path, SCALAR_DOC))
        assert spec.lost_actuators == (1,)
        np.testing.assert_array_equal(spec.half_widths, [1.0, 1.0])
        assert spec.options.seed == 42 and spec.options.num_pairs == 1000
        sys = spec.to_system()
        assert sys.B.shape == (1, 1) and sys.C[0, 0] == 0.5

    def test_lost_out_of_range(self):
        with pytest.raises(SchemaError) as e:
            validate(dict(SCALAR_DOC, lost_actuators=[0, 5]))
        assert e.value.pointer == "/lost_actuators/1" and "5" in str(e.value)

    def test_duplicate_lost(self):
        with pytest.raises(SchemaError):
            validate(dict(SCALAR_DOC, B_bar=[[1, 1, 1]], lost_actuators=[1, 1]))

    def test_all_lost(self):
        with pytest.raises(SchemaError):
            validate(dict(SCALAR_DOC, lost_actuators=[0, 1]))

    @pytest.mark.parametrize("patch,pointer", [
        ({"A": [[-1, 0]]}, "/A/0"),
        ({"A": [[-1], [0]]}, "/A"),
        ({"B_bar": [[1, 0.5], [1, 1]]}, "/B_bar"),
        ({"x0": [1.0, 2.0]}, "/x0"),
        ({"half_widths": [1.0]}, "/half_widths"),
    ])
    def test_dimensions(self, patch, pointer):
        with pytest.raises(DimensionError) as e:
            validate(dict(SCALAR_DOC, **patch))
        assert e.value.pointer == pointer

    @pytest.mark.parametrize("patch,pointer", [
        ({"extra": 1}, ""),
        ({"n": 0}, "/n"),
        ({"A": "x"}, "/A"),
        ({"options": {"seed": -1}}, "/options/seed"),
        ({"half_widths": [1, -1]}, "/half_widths/1"),
    ])
    def test_schema(self, patch, pointer):
        with pytest.raises(SchemaError) as e:
            validate(dict(SCALAR_DOC, **patch))
        assert e.value.pointer == pointer

    def test_missing_key(self):
        doc = dict(SCALAR_DOC)
        del doc["x0"]
        with pytest.raises(SchemaError):
            validate(doc)

    def test_bad_json(self, tmp_path):
        with pytest.raises(ParseError):
            load_system(write(tmp_path, "{\"n\": 1,"))

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=2), st.integers(0, 2**31))
    def test_round_trip(self, x0, seed):
        spec = validate(dict(SCALAR_DOC, A=[[-1, 0], [0.5, -2]], B_bar=[[1, 0, 0.2], [0, 1, 0.1]],
                             lost_actuators=[2], n=2, x0=x0, options={"seed": seed}))
        again = validate(json.loads(json.dumps(spec.to_dict())))
        assert again.to_dict() == spec.to_dict()


class TestCaseStudy:
    def test_B_bar(self):
        _, B_bar, _ = temperature_matrices()
        assert B_bar.shape == (3, 7)
        assert B_bar[0, 6] == pytest.approx(350 / 42186)
        assert B_bar[0, 6] == pytest.approx(8.297e-3, rel=1e-3)

    def test_lost_columns(self):
        sys = build_temperature_system(lost=[3])
        np.testing.assert_array_equal(sys.C[:, 0], [300 / 42186, 0, 0])
        sys = build_temperature_system(lost=["hac"])
        np.testing.assert_allclose(sys.C[:, 0], 350 / 42186)

    def test_structure(self):
        A, _, D = temperature_matrices()
        assert np.allclose(A, A.T)
        assert np.all(np.diag(A) < 0) and A[0, 2] == 0.0
        np.testing.assert_allclose(A @ np.ones(3) + D, 0.0, atol=1e-15)

    def test_params_positive(self):
        with pytest.raises(ValueError):
            TemperatureParams(mCp=-1.0)

    def test_actuator_names(self):
        assert [actuator_index(a) for a in ACTUATORS] == list(range(7))
        with pytest.raises(ValueError):
            actuator_index("fan")


class TestReport:
    def test_json_format(self):
        text = to_json({"b": 0.1, "a": [1, 2.5], "c": None, "d": float("inf"), "e": True})
        d = json.loads(text)
        assert list(d) == ["b", "a", "c", "d", "e"]
        assert "0.10000000000000001" in text
        assert d["d"] is None

    def test_scalar_analysis(self):
        spec = validate(dict(SCALAR_DOC, options={"num_pairs": 5}))
        r = run_analysis(spec)
        assert r.exit_code == 0
        assert r["verdicts"]["stabilizable"] == "yes"
        best = r["bounds"]["best"]["overall"]
        # nominal set [-1.5, 1.5], Z = [-0.5, 0.5]
        assert best["tn_lower"] == pytest.approx(math.log(1 + 1 / 1.5), rel=1e-12)
        assert best["tm_upper"] == pytest.approx(math.log(3), rel=1e-12)
        tm = r["reach_times"]["malfunction"]["t_star"]
        tn = r["reach_times"]["nominal"]["t_star"]
        assert tm == pytest.approx(math.log(3), abs=1e-6)
        assert tn == pytest.approx(math.log(1 + 1 / 1.5), abs=1e-6)
        assert r["summary"]["slowdown_ratio"] == pytest.approx(tm / tn)

    def test_unstable_system(self):
        spec = validate(dict(SCALAR_DOC, A=[[0.5]]))
        r = run_analysis(spec)
        assert r["verdicts"]["stabilizable"] == "no"
        assert "reason" in r["bounds"]
        assert r.exit_code == 3

    def test_deterministic(self):
        spec = validate(dict(SCALAR_DOC, options={"num_pairs": 5}))
        assert run_analysis(spec).to_json() == run_analysis(spec).to_json()

    def test_temperature_round_trip(self, tmp_path):
        spec = SystemSpec.from_system(build_temperature_system(), DEFAULT_X0).with_options(num_pairs=20)
        dump_system(spec, tmp_path / "t.json")
        again = load_system(tmp_path / "t.json")
        a = run_analysis(spec, nominal=False, malfunction=False).to_json()
        b = run_analysis(again, nominal=False, malfunction=False).to_json()
        assert a == b


class TestSweep:
    def test_single_pair(self, tmp_path):
        spec = validate(dict(SCALAR_DOC, options={"num_pairs": 1}))
        text = sweep_pairs_csv(spec, tmp_path / "s.csv")
        rows = list(csv.DictReader(io.StringIO(text)))
        kinds = [r["kind"] for r in rows]
        assert kinds.count("random") == 1 and kinds[-1] == "solver"
        assert (tmp_path / "s.csv").read_text() == text
        assert "\r" not in text


class TestCli:
    def test_check(self, tmp_path, capsys):
        assert cli.main(["check", str(write(tmp_path, SCALAR_DOC))]) == 0
        out = capsys.readouterr().out
        assert "resiliently stabilizable: yes" in out

    def test_check_unstable_still_succeeds(self, tmp_path, capsys):
        assert cli.main(["check", str(write(tmp_path, dict(SCALAR_DOC, A=[[1.0]])))]) == 0

    def test_schema_exit(self, tmp_path, capsys):
        assert cli.main(["check", str(write(tmp_path, dict(SCALAR_DOC, lost_actuators=[7])))]) == 2
        assert "/lost_actuators/0" in capsys.readouterr().err

    def test_parse_exit(self, tmp_path):
        assert cli.main(["check", str(write(tmp_path, "not json"))]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["check", str(tmp_path / "nope.json")]) == 1

    def test_usage_exit(self):
        with pytest.raises(SystemExit) as e:
            cli.main(["reachtime"])
        assert e.value.code == 2

    def test_not_stabilizable_exit(self, tmp_path):
        p = write(tmp_path, dict(SCALAR_DOC, A=[[0.5]]))
        assert cli.main(["--quiet", "reachtime", str(p), "--malfunctioning"]) == 3
        assert cli.main(["bounds", str(p), "--quiet"]) == 3

    @pytest.mark.parametrize("order", ["before", "after"])
    def test_report_and_quiet(self, tmp_path, capsys, order):
        p = write(tmp_path, SCALAR_DOC)
        rep = tmp_path / "r.json"
        glob = ["--quiet", "--report", str(rep)]
        argv = glob + ["reachtime", str(p), "--nominal"] if order == "before" else \
            ["reachtime", str(p), "--nominal"] + glob
        assert cli.main(argv) == 0
        assert capsys.readouterr().out == ""
        d = json.loads(rep.read_text())
        assert "malfunction" not in d["reach_times"]
        assert d["reach_times"]["nominal"]["t_star"] == pytest.approx(math.log(5 / 3), abs=1e-6)

    def test_seed_precedence(self, tmp_path, monkeypatch):
        p = write(tmp_path, dict(SCALAR_DOC, options={"seed": 1, "num_pairs": 2}))
        spec = load_system(p)
        assert cli._apply_seed(spec).options.seed == 1
        monkeypatch.setenv("RESILIA_SEED", "7")
        assert cli._apply_seed(spec).options.seed == 7
        assert cli._apply_seed(spec, 9).options.seed == 9

    def test_sweep_env_seed(self, tmp_path, monkeypatch):
        p = write(tmp_path, dict(SCALAR_DOC, A=[[-1, 0], [0.3, -2]], B_bar=[[1, 0, 0.2], [0, 1, 0.1]],
                                 lost_actuators=[2], n=2, x0=[1, 1]))
        cli.main(["--quiet", "sweep", str(p), "--out", str(tmp_path / "a.csv"), "--pairs", "3", "--seed", "5"])
        monkeypatch.setenv("RESILIA_SEED", "5")
        cli.main(["--quiet", "sweep", str(p), "--out", str(tmp_path / "b.csv"), "--pairs", "3"])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_bad_x0(self):
        with pytest.raises(SystemExit) as e:
            cli.main(["casestudy", "temperature", "--lost", "dw1", "--x0", "1,2"])
        assert e.value.code == 2
