import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from delta_chow.cli import SCHEMAS, load_schema, main, reference_markdown
from conftest import PAIR_TEXT, F1_TEXT

ROOT = Path(__file__).resolve().parent.parent


def run_cli(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def run_json(capsys, command, *argv, expect=0):
    status, out, err = run_cli(capsys, command, *argv, "--json")
    assert status == expect, (out, err)
    data = json.loads(out if status != 2 else err)
    schema = load_schema(command if status == 0 else "error")
    jsonschema.validate(data, schema)
    return data


def test_chow_hyper_example(capsys):
    data = run_json(capsys, "chow-hyper", "--ring", "y1", "y1'^2-4*y1")
    assert data["poly"] == F1_TEXT
    assert (data["d"], data["h"], data["g"]) == (0, 1, 2)
    assert data["nterms"] == 4


def test_dims_example(capsys):
    data = run_json(capsys, "dims", "--ring", "y1,y2", "y1'+1", "y2'")
    assert data["dim"] == 0 and data["order"] == 2


def test_charset_example(capsys):
    data = run_json(capsys, "charset", "--ring", "y1,y2", "--ranking", "orderly", "y1'+1", "y2'")
    assert data["chain"] == ["y1' + 1", "y2'"]
    assert (data["dimension"], data["order"], data["parametric_set"]) == (0, 2, [])


def test_chow_example(capsys):
    data = run_json(capsys, "chow", "--ring", "y1,y2", "y1'+1", "y2'")
    assert data["poly"] == PAIR_TEXT
    assert data["nterms"] == 10


def test_dres_206(capsys):
    data = run_json(capsys, "dres", "--n", "1", "--orders", "0,1", "--degrees", "2,2", "--matrix")
    assert data["nterms"] == 206
    assert data["block_degrees"] == [8, 2]


def test_gchow(capsys):
    data = run_json(capsys, "gchow", "--ring", "y1", "--orders", "0", "--degrees", "1", "y1'^2-4*y1")
    assert data["poly"] == F1_TEXT


def test_reduce_with_certificate(capsys):
    data = run_json(capsys, "reduce", "--ring", "y1", "--chain", "y1'^2-4*y1", "--certificate", "y1''*y1")
    assert data["results"][0]["remainder"] == "4*y1'*y1"


def test_quasivariety(capsys, tmp_path):
    from delta_chow.quasivariety import load_example_support
    index, support = load_example_support()
    path = tmp_path / "support.json"
    path.write_text(json.dumps(support))
    data = run_json(capsys, "quasivariety", "--index", "2,1,1,1,2", "--support", str(path))
    assert data["excluded"] == ["a1", "a2"]
    assert len(data["relations"]) == 1435


def test_verify_round_trip(capsys, tmp_path):
    chain = tmp_path / "chain.json"
    chow = tmp_path / "chow.json"
    status, out, _ = run_cli(capsys, "charset", "--ring", "y1", "--json", "y1'^2-4*y1")
    chain.write_text(out)
    status, out, _ = run_cli(capsys, "chow", "--ring", "y1", "--json", "y1'^2-4*y1")
    chow.write_text(out)
    data = run_json(capsys, "verify", "--ring", "y1", "--chow", str(chow), "--ideal", str(chain),
                    "--numeric", "--perturb", "1e-3")
    assert data["passed"] is True
    assert float(data["numeric"]["max_residual"]) < 1e-9


def test_verify_reports_failure(capsys, tmp_path):
    chow = tmp_path / "chow.txt"
    chow.write_text(F1_TEXT.replace("4*u00*u01^3", "5*u00*u01^3") + "\n")
    data = run_json(capsys, "verify", "--ring", "y1", "--chow", str(chow), "y1'^2-4*y1", expect=1)
    assert data["error"] == "verification_failed"


def test_unit_ideal_exit_1(capsys):
    data = run_json(capsys, "charset", "--ring", "y1", "y1", "y1+1", expect=1)
    assert data["error"] == "unit_ideal"


def test_resource_limit_exit_1(capsys):
    data = run_json(capsys, "dres", "--n", "1", "--orders", "0,1", "--degrees", "2,2",
                    "--method", "groebner", "--deadline", "0.000001", expect=1)
    assert data["error"] == "resource_limit"


def test_parse_error_exit_2(capsys):
    data = run_json(capsys, "chow", "--ring", "y1", "y1^^2", expect=2)
    assert data["error"] == "parse_error" and data["position"] == 3


@pytest.mark.parametrize("argv", [
    ["chow", "--ring", "y1", "y2+1"],
    ["chow", "--ring", "y1", "--deadline", "0", "y1'"],
    ["charset", "--ring", "y1", "--ranking", "lex", "y1"],
    ["verify", "--ring", "y1", "--chow", "/nonexistent/file", "y1'"],
])
def test_usage_errors_exit_2(capsys, argv):
    data = run_json(capsys, argv[0], *argv[1:], expect=2)
    assert data["error"] in ("usage", "parse_error")


def test_text_output(capsys):
    status, out, _ = run_cli(capsys, "dims", "--ring", "y1,y2", "y1'+1", "y2'")
    assert status == 0
    assert out.splitlines()[:2] == ["dim: 0", "order: 2"]


@pytest.mark.parametrize("argv", [
    ["chow", "--ring", "y1", "--json", "y1'^2-4*y1"],
    ["quasivariety", "--index", "1,0,1,1,2", "--support", "SUPPORT", "--json"],
    ["verify", "--ring", "y1", "--chow", "CHOW", "--numeric", "--seed", "3", "y1'^2-4*y1"],
])
def test_byte_identical_runs(tmp_path, argv):
    (tmp_path / "s.json").write_text(json.dumps(["u00'*u01", "u00*u01'", "u00^2"]))
    (tmp_path / "c.txt").write_text(F1_TEXT)
    argv = [str(tmp_path / "s.json") if a == "SUPPORT" else str(tmp_path / "c.txt") if a == "CHOW" else a for a in argv]
    cmd = [sys.executable, "-m", "delta_chow.cli", *argv]
    first = subprocess.run(cmd, capture_output=True, check=True)
    second = subprocess.run(cmd, capture_output=True, check=True)
    assert first.stdout == second.stdout and first.stdout


def test_every_schema_is_valid():
    for name in SCHEMAS:
        jsonschema.Draft202012Validator.check_schema(load_schema(name))


def test_docs_reference_is_current():
    assert (ROOT / "docs" / "cli.md").read_text() == reference_markdown() + "\n"


def test_console_script_installed():
    proc = subprocess.run(["delta-chow", "dims", "--ring", "y1", "y1'^2-4*y1"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("dim: 0")


def test_small_quasivariety(capsys, tmp_path):
    # a1*(u00'*u01 - u00*u01') + a3*u00^2 is the Chow form of y' = k*y^2 for every a3
    path = tmp_path / "support.txt"
    path.write_text("u00'*u01\nu00*u01'\nu00^2\n")
    data = run_json(capsys, "quasivariety", "--index", "1,0,1,1,2", "--support", str(path))
    assert data["relations"] == ["a1 + a2"] and data["excluded"] == ["a1"]
