import json
import math
import subprocess
import sys

import pytest

from obtuselab import cli
from obtuselab.errors import SpecError


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_space_spec():
    assert cli.parse_space_spec('{"type":"hyperboloid","a":1.0}') == {"type": "hyperboloid", "a": 1.0}
    assert cli.parse_space_spec('{"type":"profile_table","r":[0,1],"m":[0,1]}')["type"] == "profile_table"
    with pytest.raises(SpecError) as exc:
        cli.parse_space_spec('{"type":"flat_cone","length":7.0}')
    assert exc.value.field == "length"
    with pytest.raises(SpecError) as exc:
        cli.parse_space_spec('{"type": "plane",\n "scale": }')
    assert "line 2" in str(exc.value)
    with pytest.raises(SpecError):
        cli.parse_space_spec('{"type":"hyperboloid","a":-1}')


def test_growth_json(capsys):
    code, out, _ = run(["growth", "--space", '{"type":"hyperboloid","a":1.0}'], capsys)
    assert code == 0
    doc = json.loads(out)
    assert set(cli.COLUMNS) <= set(doc)
    d = doc["details"]
    assert d["v_inf"] == pytest.approx(math.pi / math.sqrt(2), abs=1e-4)
    assert d["ideal_boundary_length"] == pytest.approx(2 * math.pi / math.sqrt(2), abs=1e-4)
    assert d["total_curvature"] == pytest.approx(2 * math.pi * (1 - 1 / math.sqrt(2)), abs=1e-4)
    assert doc["wall_time"] is None
    assert "-pi/2" in doc["convention_notes"]


def test_constants(capsys):
    code, out, _ = run(["constants", "--n", "2", "--D", "1", "--rmin", "0.5", "--v1", "0.1"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["value"] == pytest.approx(math.cosh(1) - math.cosh(0.25), abs=1e-11)
    assert 0 < doc["details"]["eps"] < math.pi / 2


def test_twelve_significant_digits(capsys):
    _, out, _ = run(["angle", "--sides", "3,4,5"], capsys)
    assert '"value": 1.57079632679,' in out


def test_obtuse_inf_plane(capsys):
    code, out, _ = run(["obtuse-inf", "--space", '{"type":"plane"}', "--sep", "0.1,0.01", "--pairs", "2",
                        "--rfar", "30,100", "--samples", "90"], capsys)
    assert code == 0
    rows = json.loads(out)
    for r in rows:
        assert r["value"] == pytest.approx(math.pi / 2, abs=1e-9)
        assert r["uncertainty"] == pytest.approx(0.0, abs=1e-9)


def test_byte_identical_runs(capsys):
    args = ["dist", "--space", '{"type":"hyperboloid","a":1.0}', "--p", "2,0", "--q", "1.5,2", "--seed", "3"]
    _, a, _ = run(args, capsys)
    _, b, _ = run(args, capsys)
    assert a == b


def test_csv_output(capsys):
    code, out, _ = run(["obtuse-pair", "--space", '{"type":"flat_cone","length":1.5}', "--p", "1,0",
                        "--q", "0.7,0.9", "--out", "csv"], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == ",".join(cli.COLUMNS)
    assert len(lines) == 3


def test_exit_codes(capsys):
    assert run(["growth", "--space", '{"type":"flat_cone","length":7.0}'], capsys)[0] == 2
    assert run(["obtuse-compact", "--space", '{"type":"plane"}'], capsys)[0] == 3
    assert run(["growth", "--space", '{"type":"hyperbolic_ideal_triangle"}'], capsys)[0] == 3
    assert run(["dist", "--space", '{"type":"plane"}', "--p", "1"], capsys)[0] == 2
    assert run(["obtuse-inf", "--space", '{"type":"plane"}', "--rfar", "100,30"], capsys)[0] == 2


def test_non_convergence_exit_code(capsys, monkeypatch):
    from obtuselab.errors import NonConvergenceError

    def boom(cfg, space):
        raise NonConvergenceError("ladder has not stabilized", 1e-3)
    monkeypatch.setitem(cli.HANDLERS, "growth", boom)
    code, _, err = run(["growth", "--space", '{"type":"plane"}'], capsys)
    assert code == 4 and "residual" in err


def test_space_from_file(tmp_path, capsys):
    f = tmp_path / "cone.json"
    f.write_text('{"type": "flat_cone", "length": 3.14159}')
    code, out, _ = run(["totcurv", "--space", str(f)], capsys)
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(2 * math.pi - 3.14159, abs=1e-10)


def test_convention_notes_off(capsys):
    _, out, _ = run(["angle", "--sides", "3,4,5", "--convention-notes", "off"], capsys)
    assert json.loads(out)["convention_notes"] is None


def test_report_subset(capsys):
    code, out, _ = run(["report", "--criteria", "10"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert isinstance(doc, list) and len(doc) == 1
    assert doc[0]["details"]["criterion"] == 10 and doc[0]["value"] is True


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "obtuselab.cli", "angle", "--sides", "1,1,2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["value"] == pytest.approx(math.pi)
