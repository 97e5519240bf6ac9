import json
import shutil
import subprocess

import pytest

from patchlab.cli import main
from patchlab.errors import ScenarioError
from patchlab.scenario import dumps, parse_scenario, portable, run_scenario
from patchlab.selfcheck import fixture_names, fixture_text


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


BAD_COMPLEX = {
    "version": 1,
    "rings": {"Z9": {"kind": "chain", "p": 3, "m": 2}},
    "complexes": {"broken": {"ring": "Z9", "lo": 0, "ranks": [1, 1, 1],
                             "diffs": [{"rows": 1, "cols": 1, "entries": [[[1]]]},
                                       {"rows": 1, "cols": 1, "entries": [[[1]]]}]}},
    "pipeline": [],
}


def test_numerology_json(capsys):
    code, out = run_cli(capsys, "numerology", "--n", "2", "--r1", "0", "--r2", "1")
    rep = json.loads(out)
    assert code == 0
    assert rep["result"]["invariants"]["l0"] == 1 and rep["result"]["invariants"]["q0"] == 1


def test_numerology_table(capsys):
    code, out = run_cli(capsys, "numerology", "--n", "3", "--r1", "1", "--r2", "1", "--format", "table")
    assert code == 0
    rows = dict(line.split(None, 1) for line in out.splitlines() if line.split()[0] in ("l0", "q0", "dimY"))
    assert rows == {"l0": "3", "q0": "5", "dimY": "13"}


def test_numerology_usage_error(capsys):
    code, out = run_cli(capsys, "numerology", "--n", "2")
    assert code == 1 and json.loads(out)["error"]["code"] == "usage"


def test_patch_free_tower_fixture(tmp_path, capsys):
    path = tmp_path / "free_tower.json"
    path.write_bytes(fixture_text("free_tower.json"))
    code, out = run_cli(capsys, "patch", "--input", str(path), "--levels", "3")
    rep = json.loads(out)
    assert code == 0 and rep["summary"]["status"] == "pass"
    result = rep["steps"][0]["result"]
    assert all(result["report"][k]["pass"] for k in ("minimal_window", "actions", "depth", "comparison"))


def test_bad_complex_names_it(tmp_path, capsys):
    code, out = run_cli(capsys, "run", "--input", write(tmp_path, "bad.json", BAD_COMPLEX))
    err = json.loads(out)["error"]
    assert code == 1 and err["code"] == "not-a-complex" and "broken" in err["message"]


def test_minimal_scenario_is_empty(tmp_path, capsys):
    sc = {"version": 1, "rings": {"F3": {"kind": "prime-field", "p": 3}}, "pipeline": []}
    code, out = run_cli(capsys, "run", "--input", write(tmp_path, "min.json", sc))
    rep = json.loads(out)
    assert code == 0 and rep["steps"] == [] and rep["summary"]["status"] == "pass"


def test_error_paths(tmp_path, capsys):
    code, out = run_cli(capsys, "run", "--input", str(tmp_path / "missing.json"))
    assert code == 1 and json.loads(out)["error"]["code"] == "missing-file"
    code, out = run_cli(capsys, "run", "--input", write(tmp_path, "v.json", {"version": 99, "pipeline": []}))
    assert code == 1 and json.loads(out)["error"]["code"]
    with pytest.raises(SystemExit):
        main(["run", "--bogus"])


def test_schema_error_has_path():
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps({"version": 1, "pipeline": [{"op": "homology", "args": {"complex": "nope"},
                                                               "out": "h"}]}))
    assert "$" in str(exc.value)


@pytest.mark.parametrize("name,code", [("tampered_psi.json", 2), ("corrupted_link.json", 2), ("minimal.json", 0)])
def test_fixture_exit_codes(tmp_path, capsys, name, code):
    path = tmp_path / name
    path.write_bytes(fixture_text(name))
    got, out = run_cli(capsys, "run", "--input", str(path), "--output", str(tmp_path / "out.json"))
    assert got == code and out == ""
    rep = json.loads((tmp_path / "out.json").read_text())
    assert rep["summary"]["status"] == ("pass" if code == 0 else "fail")


def test_corrupted_link_cites_level():
    rep = run_scenario(parse_scenario(fixture_text("corrupted_link.json")))
    failed = [s for s in rep["steps"] if s["status"] == "fail"]
    assert failed and "level 2" in json.dumps(failed)


def test_reports_are_deterministic():
    for name in fixture_names():
        sc = fixture_text(name)
        first = dumps(run_scenario(parse_scenario(sc)))
        assert first == dumps(run_scenario(parse_scenario(sc), parallel=True)), name


def test_portable_big_integers():
    big = 2**53
    assert portable({"a": [big, 2**53 - 1, -big]}) == {"a": [str(big), 2**53 - 1, str(-big)]}


def test_selfcheck(capsys):
    code, out = run_cli(capsys, "selfcheck")
    rep = json.loads(out)
    assert code == 0 and rep["summary"]["fail"] == 0 and rep["summary"]["steps"] >= len(fixture_names())


@pytest.mark.skipif(shutil.which("patchlab") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["patchlab", "numerology", "--n", "2", "--r1", "1", "--r2", "0"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["result"]["invariants"]["l0"] == 0
