import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from adiabatic_elim.cli import main
from adiabatic_elim.document import DocumentError, dumps, fmt_float, load_document, parse_document, parse_operator

DOCS = Path(__file__).resolve().parent.parent / "documents"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def qubit_doc(**extra):
    doc = json.loads((DOCS / "qubit_tls.json").read_text())
    doc.update(extra)
    return doc


# ---------------------------------------------------------------- documents


def test_parse_operator_forms():
    assert np.allclose(parse_operator("sigma_z", 2), np.diag([1, -1]))
    assert np.allclose(parse_operator({"dagger": "annihilation"}, 3), np.diag([1, np.sqrt(2)], -1))
    assert np.allclose(parse_operator({"product": ["creation", "annihilation"]}, 3), np.diag([0, 1, 2]))
    assert np.allclose(parse_operator([[1, [0, 2]], [[0, -2], 3]], 2), [[1, 2j], [-2j, 3]])
    assert np.allclose(parse_operator([1, 0, 0, 1], 2), np.eye(2))
    assert np.allclose(parse_operator({"builder": "identity", "scale": [0, 1]}, 2), 1j * np.eye(2))
    with pytest.raises(DocumentError):
        parse_operator("no_such_thing", 2)
    with pytest.raises(DocumentError):
        parse_operator([[1, 2, 3]], 2)


def test_parse_document_round_trip():
    system, opts = parse_document(qubit_doc())
    assert system.dims == (2, 2)
    assert system.epsilon == pytest.approx(0.01)
    assert opts["gauge"] == "simple"


@pytest.mark.parametrize("patch,where", [
    ({"schema_version": "2.0"}, "$.schema_version"),
    ({"epsilon": -1}, "$.epsilon"),
    ({"coupling": {"type": "magic"}}, "$.coupling.type"),
    ({"options": {"gauge": "weird"}}, "$.options.gauge"),
    ({"options": {"tolerances": {"bogus": 1}}}, "$.options.tolerances"),
])
def test_parse_document_errors(patch, where):
    with pytest.raises(DocumentError) as exc:
        parse_document(qubit_doc(**patch))
    assert exc.value.location == where


def test_fock_dimension_and_rebuild():
    system, _ = load_document(str(DOCS / "squeezed.json"))
    assert system.fock_n == 20 and system.rebuild is not None
    assert system.rebuild(8).dims[0] == 8


def test_bad_json_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"a": 1,\n  oops}')
    with pytest.raises(DocumentError) as exc:
        load_document(str(p))
    assert str(exc.value).startswith(f"{p}:2:")


def test_serialization_helpers():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(float("nan")) == "null"
    out = dumps({"m": [[1.0, 2.0], [3.0, 4.0]], "z": 1 + 2j})
    assert json.loads(out)["m"] == [[1.0, 2.0], [3.0, 4.0]]


# ---------------------------------------------------------------- commands


def test_reduce_json_is_deterministic(capsys):
    path = str(DOCS / "qubit_tls.json")
    code1, out1, _ = run(["reduce", path], capsys)
    code2, out2, _ = run(["reduce", path], capsys)
    assert code1 == code2 == 0
    assert out1 == out2
    rep = json.loads(out1)
    assert rep["schema_version"] == "1.0" and rep["command"] == "reduce"


def test_reduce_csv_and_text(capsys):
    path = str(DOCS / "qubit_tls.json")
    code, out, _ = run(["reduce", path, "--format", "csv"], capsys)
    assert code == 0 and out.splitlines()[0].count(",") >= 2
    code, out, _ = run(["reduce", path, "--format", "text"], capsys)
    assert code == 0 and out.strip()


def test_missing_file_exit_2(capsys):
    code, _, err = run(["reduce", "/nonexistent/x.json"], capsys)
    assert code == 2 and "error" in err


def test_bad_tolerance_flag_exit_2(capsys):
    code, _, err = run(["reduce", str(DOCS / "qubit_tls.json"), "--tol", "nope=1"], capsys)
    assert code == 2
    code, _, _ = run(["reduce", str(DOCS / "qubit_tls.json"), "--tol", "solve_rtol"], capsys)
    assert code == 2


def test_numeric_failure_exit_3(tmp_path, capsys):
    # no dissipation on A: the fast steady state is not unique
    doc = qubit_doc()
    doc["subsystem_a"]["jumps"] = []
    p = tmp_path / "deg.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(["reduce", str(p)], capsys)
    assert code == 3 and "stage" in err


def test_truncation_failure_exit_3(capsys):
    code, _, err = run(["reduce", str(DOCS / "squeezed.json"), "--fock-n", "6"], capsys)
    assert code == 3 and "truncation_audit" in err


def test_validate_and_env_output(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ADIABATIC_ELIM_OUT", str(tmp_path))
    code, out, err = run(["validate", str(DOCS / "qubit_tls.json"), "--samples", "10", "--rho0", "plus"], capsys)
    assert code == 0 and out == ""
    rep = json.loads((tmp_path / "validate.json").read_text())
    assert rep["validation"]["error_order2"] < rep["validation"]["error_order1"]


def test_out_flag(tmp_path, capsys):
    p = tmp_path / "r.json"
    code, out, _ = run(["reduce", str(DOCS / "qubit_tls.json"), "--out", str(p)], capsys)
    assert code == 0 and out == "" and json.loads(p.read_text())["command"] == "reduce"


def test_scaling_command(capsys):
    code, out, _ = run(["scaling", str(DOCS / "qubit_tls.json"), "--samples", "20", "--rho0", "plus"], capsys)
    assert code == 0
    rep = json.loads(out)
    s = rep["scaling"]
    assert 1.7 <= s["fitted_slope_order2"] <= 2.5


def test_example_command(capsys):
    code, out, _ = run(["example", "qubit_tls", "--param", "u=0.1", "--samples", "10"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert "closed_form" in rep


def test_example_bad_param_exit_2(capsys):
    code, _, _ = run(["example", "qubit_tls", "--param", "bogus=1", "--no-validate"], capsys)
    assert code == 2


def test_audit_zero_instances(capsys):
    code, out, _ = run(["audit", "--random-instances", "0", "--conjecture-instances", "0"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["random_instances"] == 0


def test_audit_small_run(capsys):
    code, out, _ = run(["audit", "--random-instances", "5", "--format", "text"], capsys)
    assert code == 0 and "X_psd: 5 passed, 0 failed" in out


def test_console_script_module_entry():
    r = subprocess.run([sys.executable, "-m", "adiabatic_elim.cli", "--help"], capture_output=True, text=True,
                       env={**os.environ})
    assert r.returncode == 0 and "reduce" in r.stdout
