import json

import pytest

from bvgf.cli import run


def _run(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_validate_shipped(capsys):
    code, rep = _run(capsys, ["validate", "--model", "so3_lambda"])
    assert code == 0 and rep["status"] == "pass"
    assert rep["result"]["dimension"] == 24
    assert set(rep["inputs"]) == {"so3_lambda"}


def test_validate_broken_model(tmp_path, capsys):
    from importlib import resources
    doc = json.loads(resources.files("bvgf.data").joinpath("u1_lambda.json").read_text())
    doc["pairing"] = [[0] * len(doc["basis"]) for _ in doc["basis"]]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, rep = _run(capsys, ["validate", "--model", str(p)])
    assert code == 1
    assert "E_PAIRING_DEGENERATE" in {e["code"] for e in rep["result"]["errors"]}


@pytest.mark.parametrize("argv", [
    ["validate", "--model", "no_such_model"],
    ["qme", "--model", "so3_lambda", "--max-vertices", "-1"],
    ["frobnicate"],
    [],
])
def test_input_errors(capsys, argv):
    assert run(argv) == 2


def test_invalid_json(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text("{not json")
    code, rep = _run(capsys, ["validate", "--model", str(p)])
    assert code == 2 and rep["error"]["code"] == "E_SCHEMA"


def test_qme_report(capsys):
    code, rep = _run(capsys, ["qme", "--model", "so3_lambda"])
    assert code == 0
    assert rep["truncation"] == {"degree": 6, "hbar": 2, "max_vertices": 4}
    assert rep["result"]["offending"] == []
    assert "timing" not in rep


def test_action_rationals_and_out_file(tmp_path, capsys):
    split = tmp_path / "s.json"
    split.write_text(json.dumps({"shift": "1/10"}))
    out = tmp_path / "r.json"
    code = run(["action", "--model", "twisted_torus", "--split", str(split), "--max-vertices", "1",
                "--degree", "3", "--hbar-order", "1", "--out", str(out)])
    assert code == 0 and capsys.readouterr().out == ""
    rep = json.loads(out.read_text())
    coeffs = [t["coeff"] for t in rep["result"]["action"]["terms"]]
    assert coeffs and all("/" in c for c in coeffs)


def test_cohomology(capsys):
    code, rep = _run(capsys, ["cohomology", "--model", "twisted_torus"])
    assert code == 0 and rep["result"]["rank"] == 4
    assert all(rep["result"]["propagator_axioms"].values())


def test_oracle(capsys):
    code, rep = _run(capsys, ["oracle", "--model", "twisted_torus", "--max-vertices", "3"])
    assert code == 0
    assert all(r["equal"] for r in rep["result"]["counts"])


def test_observable(tmp_path, capsys):
    link = tmp_path / "link.json"
    eye = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    link.write_text(json.dumps({"components": [[{"holonomy": eye}, {"holonomy": [[0, -1, 0], [1, 0, 0], [0, 0, 1]]}]]}))
    code, rep = _run(capsys, ["observable", "--model", "twisted_torus", "--link", str(link), "--defect"])
    assert code == 0
    terms = rep["result"]["observable"]["terms"]
    assert {"monomial": [], "hbar": 0, "coeff": "1/1"} in terms


def test_bad_link_file(tmp_path, capsys):
    link = tmp_path / "link.json"
    link.write_text(json.dumps({"components": [[{"holonomy": [[0, 0], [0, 0]]}]]}))
    assert run(["observable", "--model", "twisted_torus", "--link", str(link)]) == 2


def test_homotopy_short(tmp_path, capsys):
    split = tmp_path / "s.json"
    split.write_text(json.dumps({"shift": "1/10"}))
    code, rep = _run(capsys, ["homotopy", "--model", "twisted_torus", "--split1", str(split), "--nodes", "5",
                              "--degree", "3", "--no-richardson"])
    # without the Richardson comparison residual2 must vanish exactly, which a 5-node grid cannot do
    assert code == 1
    res = rep["result"]
    assert res["residual1_zero_all"] and res["endpoints_match"] and res["contraction_zero"]
    assert any(w["residual"] == 2 for w in res["witnesses"])


def test_threads_flag_keeps_bytes(capsys):
    run(["qme", "--model", "so3_lambda"])
    a = capsys.readouterr().out
    run(["--threads", "2", "qme", "--model", "so3_lambda"])
    b = capsys.readouterr().out
    assert a == b
