import json
import subprocess
import sys

import numpy as np
import pytest

from s3d import cli
from s3d.io import parse_curve, save_dataset, save_model
from s3d.model import Dataset, predict, single_layer

TINY_TOY = {"steps_per_copy": 40, "rounds": 2, "n_samples": 60, "log_every": 10}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def hand_files(tmp_path, perfect=False):
    net = single_layer("rbf", [[0.0, 0.0]], [1.0])
    x = np.array([[1.0, 0.0]])
    data = Dataset(x, predict(net, x) if perfect else [0.0])
    save_model(net, tmp_path / "model.json")
    save_dataset(data, tmp_path / "data.csv")
    return str(tmp_path / "model.json"), str(tmp_path / "data.csv")


def test_toy_rbf_outputs_and_determinism(tmp_path):
    cfg = write_json(tmp_path / "toy.json", TINY_TOY)
    for out in ("a", "b"):
        assert cli.main(["toy-rbf", "--config", cfg, "--seed", "1", "--out", str(tmp_path / out)]) == 0
    for name in ("loss_curve.csv", "model.json", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = parse_curve((tmp_path / "a" / "loss_curve.csv").read_text())
    assert [r[0] for r in rows] == sorted({r[0] for r in rows})
    assert rows[-1][3].startswith("stop:")
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["final_neuron_count"] == 3 and summary["seed"] == 1
    assert len(summary["split_events"]) == 2


def test_toy_flags_override_config(tmp_path):
    cfg = write_json(tmp_path / "toy.json", {**TINY_TOY, "method": "s3d"})
    out = tmp_path / "o"
    assert cli.main(["toy-rbf", "--config", cfg, "--seed", "0", "--out", str(out), "--method", "s2d", "--rounds", "1"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["method"] == "s2d" and summary["trace"]["config"]["rounds"] == 1
    assert summary["trace"]["config"]["scheme_mode"] == "positive-only"


def test_grow_subcommand(tmp_path):
    model, data = hand_files(tmp_path)
    cfg = write_json(tmp_path / "g.json", {"model": model, "data": data, "rounds": 1, "steps": 5, "c": 3.0})
    assert cli.main(["grow", "--config", cfg, "--seed", "0", "--out", str(tmp_path / "run")]) == 0
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["trace"]["config"]["c"] == 3.0


def test_gains_hand_instance(tmp_path, capsys):
    model, data = hand_files(tmp_path)
    assert cli.main(["gains", "--model", model, "--data", data, "--c", "1"]) == 0
    (rep,) = json.loads(capsys.readouterr().out)["neurons"]
    assert rep["lambda_min"] == -1.0 and rep["G_positive"] == -1.0 and rep["G2"] == rep["G_positive"]


def test_gains_perfect_fit(tmp_path):
    model, data = hand_files(tmp_path, perfect=True)
    assert cli.main(["gains", "--model", model, "--data", data, "--out", str(tmp_path)]) == 0
    (rep,) = json.loads((tmp_path / "gains.json").read_text())["neurons"]
    assert rep["G_positive"] == rep["G2"] == rep["G3"] == rep["G4"] == 0.0


def test_verify_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["verify", "--suite", "knapsack", "--trials", "5", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["knapsack"]["failures"] == 0 and "worst_margin" in report["knapsack"]
    monkeypatch.setitem(cli.SUITES, "knapsack", lambda trials, seed: {"trials": trials, "failures": 1, "worst_margin": -1.0})
    monkeypatch.setattr("s3d.verify.SUITES", cli.SUITES)
    assert cli.main(["verify", "--suite", "knapsack", "--trials", "5", "--out", str(tmp_path)]) == 1


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["toy-rbf", "--seed", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "--suite", "unknown"])
    assert exc.value.code == 2
    cfg = write_json(tmp_path / "toy.json", {"bogus": 1})
    assert cli.main(["toy-rbf", "--config", cfg, "--seed", "0", "--out", str(tmp_path)]) == 2
    assert cli.main(["verify", "--suite", "eigen", "--trials", "0"]) == 2


def test_io_errors(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    _, data = hand_files(tmp_path)
    assert cli.main(["gains", "--model", str(tmp_path / "bad.json"), "--data", data]) == 3
    assert cli.main(["toy-rbf", "--config", str(tmp_path / "missing.json"), "--seed", "0", "--out", str(tmp_path)]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "s3d", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "toy-rbf" in proc.stdout
