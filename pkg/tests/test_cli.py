import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from lambdageq import geq
from lambdageq.cli import dispatch
from conftest import COMMUTATOR, FREE_PAIR


@pytest.fixture
def built(tmp_path):
    src = tmp_path / "zz.txt"
    src.write_text(COMMUTATOR)
    out = tmp_path / "zz.geq"
    assert dispatch(["geq", "build", str(src), "-o", str(out), "--rank", "2"]) == 0
    return out, tmp_path / "zz.sol"


def test_build_writes_equation_and_solution(built):
    out, sol = built
    omega = geq.parse(out.read_text())
    u = geq.parse_solution(sol.read_text(), 2)
    assert omega.rho == 4 and len(omega.bases) == 6
    assert geq.verify_solution(omega, u) is None


def test_validate_and_tau(built, capsys):
    out, _ = built
    assert dispatch(["geq", "validate", str(out)]) == 0
    assert dispatch(["geq", "tau", str(out)]) == 0
    assert capsys.readouterr().out.splitlines()[1] == "tau = 2"
    assert dispatch(["geq", "tau", "--format", "json", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["tau"] == 2


def test_eliminate(built, capsys):
    out, sol = built
    assert dispatch(["geq", "eliminate", str(out), "--solution", str(sol), "--rank", "2"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("complete: yes")
    assert "G1: free (rank=1)" in text and "G2: hnn" in text


def test_eliminate_report_round_trip(built, tmp_path, capsys):
    out, sol = built
    report = tmp_path / "r.json"
    dispatch(["geq", "eliminate", str(out), "--solution", str(sol), "--rank", "2", "--report", str(report),
              "--format", "json"])
    printed = json.loads(capsys.readouterr().out)
    assert json.loads(report.read_text()) == printed


def test_budget_exit_code(built, capsys):
    out, sol = built
    code = dispatch(["geq", "eliminate", str(out), "--solution", str(sol), "--max-steps", "0", "--rank", "2"])
    assert code == 1
    assert "budget exhausted" in capsys.readouterr().err


def test_free_pair(tmp_path, capsys):
    src = tmp_path / "f.txt"
    src.write_text(FREE_PAIR)
    out = tmp_path / "f.geq"
    assert dispatch(["geq", "build", str(src), "-o", str(out)]) == 0
    capsys.readouterr()
    assert dispatch(["geq", "eliminate", str(out), "--solution", str(tmp_path / "f.sol")]) == 0
    assert "G1: free (rank=2)" in capsys.readouterr().out


def test_json_equation_round_trip(built, tmp_path):
    out, _ = built
    omega = geq.parse(out.read_text())
    j = tmp_path / "zz.json"
    j.write_text(json.dumps(geq.to_json(omega)))
    assert geq.from_json(j.read_text()) == omega
    assert dispatch(["geq", "validate", str(j)]) == 0


def test_render_svg(built, tmp_path):
    out, _ = built
    svg = tmp_path / "d.svg"
    assert dispatch(["geq", "render", str(out), "-o", str(svg)]) == 0
    root = ET.fromstring(svg.read_text())
    assert root.tag.endswith("svg")
    labels = {t.text.split()[0] for t in root.iter() if t.tag.endswith("text")}
    assert {b.id for b in geq.parse(out.read_text()).bases} <= labels
    assert {"h1", "h2", "h3", "h4"} <= labels


def test_unknown_subcommand():
    assert dispatch(["geq", "frob"]) == 2
    proc = subprocess.run([sys.executable, "-m", "lambdageq.cli", "geq", "frob"], capture_output=True, text=True)
    assert proc.returncode == 2


def test_domain_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.geq"
    bad.write_text("geq rank=1 items=2\nbase a 1 2 +1 dual b\n")
    assert dispatch(["geq", "validate", str(bad)]) == 1


def test_lenfun_check(tmp_path, capsys):
    f = tmp_path / "w.txt"
    f.write_text("x  # generator\ny\n")
    assert dispatch(["lenfun", "check", str(f), "--closure-depth", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "sample size 161"  # reduced words of length <= 4 over x, y
    assert [ln.split(":")[0] for ln in lines[1:]] == ["L1", "L2", "L3", "L4", "L5"]
