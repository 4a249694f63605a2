import json
import subprocess
import sys

import numpy as np
import pytest

from cstarincl.algebra import SubalgebraEmbedding, embedding_to_json
from cstarincl.cli import main
from cstarincl.matcore import matrix_to_json

E11xI2 = np.kron(np.diag([1.0, 0.0]), np.eye(2))


@pytest.fixture
def instances(tmp_path):
    left = tmp_path / "left.json"
    right = tmp_path / "right.json"
    left.write_text(json.dumps({"embedding": embedding_to_json(SubalgebraEmbedding.tensor_left(2, 2)),
                                "a": matrix_to_json(E11xI2)}))
    right.write_text(json.dumps({"embedding": embedding_to_json(SubalgebraEmbedding.tensor_right(2, 2)),
                                 "a": matrix_to_json(E11xI2)}))
    return left, right


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def report(path):
    return json.loads(open(path).read())


def test_full_decide_exit_codes(instances, capsys, tmp_path):
    left, right = instances
    out = tmp_path / "d.json"
    code, _ = run(["full", "decide", "--instance", left, "--out", out], capsys)
    assert code == 0 and report(out)["decision"] == "full"
    code, text = run(["full", "decide", "--instance", right, "--out", "-"], capsys)
    rep = json.loads(text)
    assert code == 3 and rep["decision"] == "not_full" and rep["result"]["witness"] is not None


def test_certify_then_verify_round_trip(instances, capsys, tmp_path):
    left, _ = instances
    cert = tmp_path / "c.json"
    assert run(["full", "certify", "--instance", left, "--seed", 3, "--out", cert], capsys)[0] == 0
    code, text = run(["full", "verify", "--emb", left, "--cert", cert], capsys)
    assert code == 0 and json.loads(text)["decision"] == "valid"
    rep = report(cert)
    rep["result"]["certificate"]["margin"] = 1e6
    cert.write_text(json.dumps(rep))
    assert run(["full", "verify", "--emb", left, "--cert", cert], capsys)[0] == 3


def test_certify_not_full_and_budget(instances, capsys):
    _, right = instances
    assert run(["full", "certify", "--instance", right, "--seed", 0], capsys)[0] == 3


def test_algebra_commands(instances, capsys, tmp_path):
    left, _ = instances
    code, text = run(["algebra", "validate", "--instance", left], capsys)
    assert code == 0
    com = tmp_path / "com.json"
    assert run(["algebra", "commutant", "--emb", left, "--out", com], capsys)[0] == 0
    assert report(com)["result"]["dimension"] == 4
    assert run(["algebra", "validate", "--emb", com], capsys)[0] == 0
    code, text = run(["algebra", "expect", "--instance", left], capsys)
    e = json.loads(text)["result"]["expectation"]
    assert np.allclose(np.array(e["re"]), 0.5 * np.eye(4))


def test_tower_build_verify_propagate(capsys, tmp_path):
    t = tmp_path / "t.json"
    assert run(["tower", "build", "--ks", "2,2", "--ls", "6,6", "--depth", 2, "--out", t], capsys)[0] == 0
    assert report(t)["result"]["ambient_dims"] == [6, 216]
    code, text = run(["tower", "verify", "--tower", t, "--seed", 0, "--budget", 1024], capsys)
    assert code == 0 and json.loads(text)["decision"] == "verified"
    a = tmp_path / "a.json"
    v = np.arange(1, 7) + 1j
    a.write_text(json.dumps(matrix_to_json(np.outer(v, v.conj()))))
    code, text = run(["tower", "propagate", "--tower", t, "--a", a, "--seed", 0], capsys)
    assert code == 0 and json.loads(text)["result"]["level"] == 2


def test_tower_build_input_error(capsys):
    assert main(["tower", "build", "--ks", "2", "--ls", "2", "--depth", "1"]) == 2


def test_tower_budget(capsys):
    code, text = run(["tower", "budget", "--n", 2, "--eps", 0.1], capsys)
    rep = json.loads(text)
    assert code == 0 and rep["result"]["delta"] < 1e-4


def test_nonorth_round_trip(capsys, tmp_path):
    it = tmp_path / "i.json"
    assert run(["nonorth", "intertwine", "--d", 2, "--k", 3, "--out", it], capsys)[0] == 0
    assert report(it)["result"]["residual"] <= 1e-10
    code, _ = run(["nonorth", "certify", "--u", it, "--d", 2, "--k", 3, "--seed", 0, "--budget", 512], capsys)
    assert code == 0
    ident = tmp_path / "id.json"
    ident.write_text(json.dumps(matrix_to_json(np.eye(4))))
    assert run(["nonorth", "certify", "--u", ident, "--d", 2, "--k", 2, "--seed", 0, "--budget", 256], capsys)[0] == 3


def test_ksearch_commands(capsys, tmp_path):
    code, text = run(["ksearch", "run", "--d", 5, "--k", 2], capsys)
    assert code == 3 and json.loads(text)["result"]["status"] == "infeasible_by_bound"
    csv_path = tmp_path / "ev.csv"
    res = tmp_path / "r.json"
    code, _ = run(["ksearch", "run", "--d", 2, "--k", 2, "--seed", 1, "--budget", 1, "--iters", 0,
                   "--csv", csv_path, "--out", res], capsys)
    assert code == 0 and csv_path.read_text().startswith("d,k,status,margin,starts,seed")
    # a search report is accepted by the certifier
    assert run(["nonorth", "certify", "--u", res, "--d", 2, "--k", 2, "--seed", 2, "--budget", 512], capsys)[0] == 0
    code, text = run(["ksearch", "interval", "--d", 4, "--budget", 0], capsys)
    assert json.loads(text)["result"]["k_lo"] == 3


def test_manifest_and_determinism(instances, capsys):
    left, _ = instances
    _, t1 = run(["full", "certify", "--instance", left, "--seed", 5], capsys)
    _, t2 = run(["full", "certify", "--instance", left, "--seed", 5], capsys)
    r1, r2 = json.loads(t1), json.loads(t2)
    assert r1["decision"] == r2["decision"]
    assert r1["result"]["certificate"] == r2["result"]["certificate"]
    m = r1["manifest"]
    assert m["seed"] == 5 and m["tolerances"]["eig_floor"] == 1e-9 and str(left) in m["inputs"]
    assert len(m["inputs"][str(left)]) == 64


def test_ci_mode_requires_seed(instances, capsys):
    left, _ = instances
    assert main(["full", "certify", "--instance", str(left), "--ci"]) == 2


def test_input_errors(capsys, tmp_path):
    assert main(["nope"]) == 2
    assert main(["full", "decide", "--instance", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["full", "decide", "--instance", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "error" in err


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "cstarincl.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
