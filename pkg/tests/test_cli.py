import csv
import json

import pytest

from ensemble_bcs.cli import main
from ensemble_bcs.model import BcsInstance


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_set(tmp_path, capsys):
    d = tmp_path / "inst"
    code, out, _ = run(capsys, "generate", "--n", 10, "--m", 6, "--k", 2, "--count", 4, "--seed", 7, "--out-dir", d)
    assert code == 0 and "4 instances" in out
    return d


def test_generate_n60_geometry(tmp_path, capsys):
    d = tmp_path / "g"
    code, _, _ = run(capsys, "generate", "--n", 60, "--m", 30, "--k", 5, "--count", 50, "--seed", 7, "--out-dir", d)
    assert code == 0
    files = sorted(p for p in d.glob("instance_*.json"))
    assert len(files) == 50
    assert all(int(BcsInstance.load(p).x_true.sum()) == 5 for p in files[:5])
    assert json.loads((d / "manifest.json").read_text())["gen_config"]["n_vars"] == 60


def test_generate_rejects_k_over_n(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--k", 70, "--n", 60, "--out-dir", tmp_path / "x")
    assert code == 2 and "k exceeds n" in err


def test_generate_deterministic(tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "generate", "--n", 8, "--m", 4, "--k", 2, "--count", 3, "--seed", 1, "--out-dir", tmp_path / name)
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_solve_tiny_exact(tmp_path, capsys):
    path = tmp_path / "tiny.json"
    BcsInstance([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], x_true=(1, 0)).save(path)
    code, out, _ = run(capsys, "solve", "--instance", path, "--lambda", 0, "--sampler", "exact")
    doc = json.loads(out)
    assert code == 0
    assert doc["x"] == [1, 0]
    assert doc["energy"] == -1.0 and doc["objective"] == 0.0
    assert doc["sparsity"] == 1 and doc["error"] == 0.0


def test_solve_sa_and_ensemble(small_set, capsys):
    inst = small_set / "instance_000.json"
    code, out, _ = run(capsys, "solve", "--instance", inst, "--lambda", 1, "--reads", 50, "--sweeps", 50)
    assert code == 0 and len(json.loads(out)["x"]) == 10
    code, out, _ = run(capsys, "solve", "--instance", inst, "--lambdas", "1,2,3", "--reads", 50, "--sweeps", 50)
    doc = json.loads(out)
    assert code == 0 and len(doc["per_lambda"]) == 3 and len(doc["x_hat"]) == 10


def test_solve_relative_mode(small_set, capsys):
    inst = small_set / "instance_000.json"
    code, out, _ = run(capsys, "solve", "--instance", inst, "--lambda", 0.1, "--lambda-mode", "relative", "--sampler", "exact")
    doc = json.loads(out)
    assert code == 0 and doc["lambda_effective"] > doc["lambda"]


def test_solve_errors(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", "--instance", tmp_path / "missing.json", "--lambda", 1)
    assert code == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "solve", "--instance", bad, "--lambda", 1)[0] == 1
    big = tmp_path / "big.json"
    BcsInstance([[1.0] * 30], [1.0]).save(big)
    code, _, err = run(capsys, "solve", "--instance", big, "--lambda", 1, "--sampler", "exact")
    assert code == 2 and "25" in err


def test_sweep_default_rows(small_set, capsys):
    code, out, _ = run(capsys, "sweep", "--instances", small_set, "--sampler", "exact")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and len(rows) == 1 + 6
    assert rows[-1][0] == "Λ={12,16,20}"


def test_sweep_single_lambda(small_set, capsys):
    code, out, _ = run(capsys, "sweep", "--instances", small_set, "--lambdas", 16, "--ensembles", "none", "--sampler", "exact")
    assert code == 0 and len(out.splitlines()) == 2


def test_sweep_out_file(small_set, tmp_path, capsys):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "sweep", "--instances", small_set, "--sampler", "exact", "--format", "csv", "--out", target)
    assert code == 0
    assert target.read_text().startswith("label,err_min")
    assert out.count("\n") == 1 and "r.csv" in out


def test_sweep_mixed_geometry(tmp_path, capsys):
    d = tmp_path / "mixed"
    d.mkdir()
    BcsInstance([[1.0, 0.0]], [1.0], x_true=(1, 0)).save(d / "a.json")
    BcsInstance([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], x_true=(1, 0)).save(d / "b.json")
    code, _, err = run(capsys, "sweep", "--instances", d, "--sampler", "exact")
    assert code == 2 and "geometr" in err


def test_usage_errors(small_set, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--instances", str(small_set), "--reads", "0"])
    assert exc.value.code == 2
    code, _, _ = run(capsys, "sweep", "--instances", small_set, "--ensembles", "1,1")
    assert code == 2


@pytest.mark.parametrize("cmd", ["generate", "solve", "sweep"])
def test_help_documents_defaults(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    out = capsys.readouterr().out
    assert exc.value.code == 0
    assert "--seed" in out
    if cmd != "generate":
        assert "0.1" in out and "median" in out and "1000" in out
