import json
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from bcalc.cli import COMMANDS, comparable, dumps, main, run
from bcalc.manifest import ManifestInvalid, load_manifest

MANIFESTS = Path(__file__).resolve().parent.parent / "manifests"


def m(name):
    return str(MANIFESTS / f"{name}.json")


def invoke(*args, env=None):
    return CliRunner().invoke(main, list(args), env=env)


class TestClassify:
    def test_function_suite(self):
        report, _, code = run("classify", m("classify_functions"))
        assert code == 0
        funcs = report["results"]["functions"]
        assert all(f["matches_expected"] for f in funcs.values())
        assert funcs["inverse_log"]["class"] == "r-smooth-not-a"

    def test_maps(self):
        maps = run("classify", m("classify_maps"))[0]["results"]["maps"]
        assert maps["projection"]["b_fibration"] and maps["product"]["b_fibration"]
        assert maps["not_b_normal"]["b_submersion"]["b_submersion"] and not maps["not_b_normal"]["flags"]["b_normal"]
        assert maps["product"]["b_jacobian"] == [["1", "1"]]
        assert maps["not_b_normal"]["b_jacobian"] == [["1", "0"], ["1", "1"]]

    def test_empty_manifest(self):
        result = invoke("classify", m("empty"))
        assert result.exit_code == 2
        assert "no functions" in json.loads(result.stdout)["errors"][0]["message"]

    def test_order_flag(self):
        report = run("classify", m("classify_functions"), {"order": 3})[0]
        assert report["results"]["functions"]["power"]["certified_order"] == 3


class TestWeights:
    def test_twisted_cylinder(self):
        report, _, code = run("weights", m("quotient_cylinder_a2"))
        atlas = report["results"]["atlas"]
        assert code == 0
        assert atlas["holonomy"]["Qa.x"]["holonomy"] == "2" and atlas["holonomy"]["Qa.x"]["twisted"]
        assert atlas["weight_space"]["dimension"] == 0
        assert atlas["weight"] == {"Qa.x": "0"} and report["warnings"]

    def test_untwisted_cylinder(self):
        atlas = run("weights", m("quotient_cylinder_a1"))[0]["results"]["atlas"]
        assert atlas["weight_space"]["dimension"] == 1 and atlas["weight"] == {"Qa.x": "1/2"}

    def test_interval_maps(self):
        maps = run("weights", m("interval"))[0]["results"]["maps"]
        assert maps["power"]["pullback"] == {"t": "3/2"}
        assert maps["product"]["pushforward"] == {"t": "1/2"}


class TestOtherCommands:
    def test_corners(self):
        res = run("corners", m("square"))[0]["results"]["atlas"]
        assert res["corner_counts"] == {"0": 1, "1": 4, "2": 4} and res["validation"]["valid"]
        rows = run("corners", m("corner_maps"))[0]["results"]["maps"]
        assert rows["diagonal"][1]["image"]["faces"] == ["x", "y"]
        assert rows["to_boundary"][0]["image"]["depth"] == 1

    def test_glue(self):
        res = run("glue", m("glue"))[0]["results"]
        assert res["profile"]["round_trip_max_rel_error"] <= 1e-12
        assert res["maps"]["square"]["probe"]["verdict"] == "smooth-consistent"
        assert res["maps"]["product"]["probe"]["verdict"] == "non-smooth-detected"
        for row in res["maps"]["fifth"]["slope_near_face"]:
            assert abs(row["ratio"] - 0.2) <= 0.002

    def test_phg(self):
        res = run("phg", m("phg"))[0]["results"]["maps"]
        assert ["1", 1] in res["product"]["pushforward"]["t"]

    def test_elliptic(self):
        ops = run("elliptic", m("elliptic"))[0]["results"]["operators"]
        assert [s["index"] for s in ops["v"]["solves"]] == [-1, 1]
        assert ops["v2_minus_1"]["solves"][0]["index"] == 0
        assert [j["index_change"] for j in ops["v2_minus_1"]["sweep"]["jumps"]] == [-2, -2]
        assert all(o["sweep"]["duality_holds"] and o["sweep"]["kernel_non_increasing"] for o in ops.values())

    def test_cohomology(self):
        report = run("cohomology", m("cohomology"))[0]
        res = report["results"]
        assert res["interval"] == {"bH0": 1, "bH1": 2}
        assert [q["dims"] for q in res["quotient"]] == [[1, 2, 1], [1, 1, 0]]
        assert all(q["prediction"] for q in res["quotient"]) and len(report["predictions"]) == 2

    def test_cohomology_from_atlas(self):
        res = run("cohomology", m("quotient_cylinder_a2"))[0]["results"]
        assert res["atlas_holonomy"] == {"Qa.x": "2"} and res["quotient"][0]["dims"] == [1, 1, 0]


class TestValidation:
    def test_schema_errors_are_listed(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"functions": [{"id": "f"}], "colour": 1}))
        result = invoke("classify", str(p))
        assert result.exit_code == 2
        errors = json.loads(result.stdout)["errors"]
        assert len(errors) == 2

    def test_parse_error(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"functions": [{"id": "f", "expr": "(pow x"}]}))
        report, _, code = run("classify", str(p))
        assert code == 2 and report["errors"][0]["path"] == "functions/0"

    def test_unknown_chart(self):
        with pytest.raises(ManifestInvalid) as info:
            load_manifest({"maps": [{"id": "f", "source": "A", "target": "B", "components": ["x"]}]})
        assert "unknown chart" in info.value.errors[0]["message"]

    def test_bad_face(self):
        with pytest.raises(ManifestInvalid):
            load_manifest({"charts": [{"id": "H", "coords": ["x"]}], "faces": [{"id": "F", "locals": [["H", "y"]]}]})

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        assert run("classify", str(p))[2] == 2

    def test_not_elliptic_reported_with_context(self):
        report, _, code = run("elliptic", {"operators": [{"id": "P", "coeffs": ["1", "x"]}]})
        assert code == 2 and report["errors"][0]["context"] == "operator P"
        assert report["errors"][0]["type"] == "NotElliptic"


def test_numerical_instability_exit_code(monkeypatch):
    import bcalc.elliptic as el

    monkeypatch.setattr(el, "SVD_RTOL", 0.5)
    report, _, code = run("elliptic", {"operators": [{"id": "P", "coeffs": ["1", "0", "1"], "solve": [[0.5, 0.5]],
                                                      "sweep": {"lo": 0.5, "hi": 0.5, "steps": 1}}]})
    assert code == 3 and report["errors"][0]["type"] == "DiscretizationUnstable"


def test_csv_side_files(tmp_path):
    out = tmp_path / "report.json"
    result = invoke("elliptic", m("elliptic"), "--out", str(out), "--csv-dir", str(tmp_path / "csv"), "--grid", "96")
    assert result.exit_code == 0
    assert json.loads(out.read_text())["results"]["grid"] == 96
    rows = (tmp_path / "csv" / "elliptic_v.csv").read_text().splitlines()
    assert rows[0] == "lambda,fredholm,ker,coker,index" and len(rows) == 32
    invoke("glue", m("glue"), "--out", str(out), "--csv-dir", str(tmp_path / "csv"))
    assert (tmp_path / "csv" / "glue_product.csv").read_text().startswith("h,")


def test_precision_env():
    result = invoke("glue", m("glue"), env={"BCALC_PRECISION": "30"})
    assert json.loads(result.stdout)["results"]["profile"]["precision_digits"] == 30


@pytest.mark.parametrize("command,name", [("classify", "classify_maps"), ("weights", "interval"),
                                          ("glue", "glue"), ("elliptic", "elliptic")])
def test_determinism(command, name):
    a = invoke(command, m(name), "--seed", "7")
    b = invoke(command, m(name), "--seed", "7")
    ra, rb = json.loads(a.stdout), json.loads(b.stdout)
    assert dumps(comparable(ra)) == dumps(comparable(rb))
    assert ra["inputs_digest"] != json.loads(invoke(command, m(name), "--seed", "8").stdout)["inputs_digest"]


def test_report_round_trips():
    report = run("weights", m("interval"))[0]
    assert json.loads(dumps(report)) == report


@pytest.mark.parametrize("path", sorted(MANIFESTS.glob("*.json")), ids=lambda p: p.stem)
def test_every_manifest_runs_quickly(path):
    start = time.perf_counter()
    ran = 0
    for c in COMMANDS:
        _, _, code = run(c, str(path))
        assert code in (0, 2)
        ran += code == 0
    assert time.perf_counter() - start < 60
    assert ran >= 1 or path.stem == "empty"


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "bcalc", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "cohomology" in out.stdout
