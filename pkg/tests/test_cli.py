import json
import os
import subprocess
import sys

import numpy as np
import pytest

from irpdfl.cli import run
from irpdfl.instance import read_instance
from irpdfl.model import build_standard_form
from irpdfl.solver import brute_force_oracle


def test_gen_then_solve_matches_oracle(tmp_path, capsys):
    path = tmp_path / "a.json"
    assert run(["gen", "--n", "2", "--t", "2", "--k", "3", "--seed", "7", "-o", str(path)]) == 0
    capsys.readouterr()
    assert run(["solve", str(path), "--method", "bnb"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("status=optimal objective=")
    value = float(line.split("objective=")[1])
    oracle = brute_force_oracle(build_standard_form(read_instance(path))).objective
    assert value == pytest.approx(oracle, abs=1e-6)


def test_solve_writes_plan_and_accepts_demand(tmp_path, capsys):
    path = tmp_path / "a.json"
    run(["gen", "--seed", "3", "-o", str(path)])
    demand = tmp_path / "d.csv"
    d = np.asarray(read_instance(path).demand) * 0.5
    np.savetxt(demand, d, delimiter=",")
    plan = tmp_path / "plan.json"
    assert run(["solve", str(path), "--demand", str(demand), "-o", str(plan)]) == 0
    out = json.loads(plan.read_text())
    assert set(out) >= {"planned_objective", "q", "z", "y"}
    q = np.array(out["q"])
    assert q.shape == d.shape and q.min() >= -1e-9
    # the deliveries must cover the halved demand net of the initial stock
    inst = read_instance(path)
    assert np.all(inst.initial_inventory + q.sum(axis=1) >= d.sum(axis=1) - 1e-6)
    for method in ("relax-qp", "relax-barrier"):
        assert run(["solve", str(path), "--method", method]) == 0
    assert capsys.readouterr().out.count("status=optimal") == 3


def test_solve_missing_file_names_path(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert run(["solve", str(missing), "--method", "bnb"]) == 1
    assert str(missing) in capsys.readouterr().err


def test_solve_infeasible_demand_exits_one(tmp_path, capsys):
    path = tmp_path / "a.json"
    run(["gen", "--seed", "1", "-o", str(path)])
    demand = tmp_path / "d.csv"
    demand.write_text("900,900\n900,900\n")
    assert run(["solve", str(path), "--demand", str(demand)]) == 1
    assert "status" in capsys.readouterr().err


def test_gradcheck_passes(capsys):
    assert run(["gradcheck", "--method", "qp", "--dim", "10", "--trials", "20"]) == 0
    err = float(capsys.readouterr().out.split("error")[1].split()[0])
    assert err <= 1e-4
    assert run(["gradcheck", "--method", "barrier", "--dim", "8", "--trials", "5"]) == 0


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    [],
    ["gen", "--colour", "red", "-o", "{out}"],
    ["sweep", "--eps", "0:x:1", "-o", "{out}"],
    ["gen", "--n", "0", "-o", "{out}"],
    ["train", "--data", "{tmp}", "--mode", "two-stage", "--lambda", "0.1", "-o", "{out}", "--report", "{rep}"],
    ["train", "--data", "{tmp}", "--lambda", "0.1", "--mu", "0.01", "-o", "{out}"],
])
def test_usage_errors_exit_two_without_output(tmp_path, argv, capsys):
    from irpdfl import predictor as pr

    pr.save_dataset(pr.synthesize_dataset(3, seed=0), tmp_path)
    sub = {"{out}": str(tmp_path / "out"), "{rep}": str(tmp_path / "rep.csv"), "{tmp}": str(tmp_path)}
    argv = [sub.get(a, a) for a in argv]
    before = set(os.listdir(tmp_path))
    assert run(argv) == 2
    assert set(os.listdir(tmp_path)) == before
    assert "usage" in capsys.readouterr().err.lower()


def test_sweep_is_byte_identical_with_header(tmp_path):
    argv = ["sweep", "--instances", "2", "--eps", "0:0.2:0.1", "--trials", "2", "--seed", "5",
            "--template", "2,2,3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(argv + ["-o", str(a)]) == 0
    assert run(argv + ["-o", str(b)]) == 0
    ta, tb = a.read_text().splitlines(), b.read_text().splitlines()
    assert ta[1:] == tb[1:]
    assert ta[0].startswith("# irpdfl v1 seed=5 cmd=sweep --instances 2")
    assert ta[1] == "epsilon,trial,mse,objective_regret,realized_regret"
    assert len(ta) == 2 + 3 * 4


def test_dataset_train_eval_roundtrip(tmp_path, capsys):
    data = tmp_path / "data"
    assert run(["dataset", "--instances", "5", "--seed", "2", "-o", str(data)]) == 0
    model, report = tmp_path / "m.txt", tmp_path / "r.csv"
    assert run(["train", "--mode", "two-stage", "--epochs", "2", "--hidden", "8", "--data", str(data),
                "-o", str(model), "--report", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0].startswith("# irpdfl v1 seed=0 cmd=train")
    assert lines[1] == "epoch,train_loss,val_mse,val_realized_regret"
    assert len(lines) == 2 + 3
    dfl_model = tmp_path / "dfl.txt"
    assert run(["train", "--mode", "dfl", "--mu", "0.001", "--epochs", "1", "--hidden", "8", "--init", str(model),
                "--data", str(data), "-o", str(dfl_model), "--report", str(tmp_path / "r2.csv")]) == 0
    out = tmp_path / "eval.csv"
    assert run(["eval", "--model", str(dfl_model), "--test", str(data), "-o", str(out)]) == 0
    ev = out.read_text().splitlines()
    assert ev[1] == "instance,mse,realized_regret" and len(ev) == 3
    assert "mean_realized_regret=" in capsys.readouterr().out


def test_eval_rejects_malformed_model(tmp_path, capsys):
    data = tmp_path / "data"
    run(["dataset", "--instances", "3", "-o", str(data)])
    bad = tmp_path / "bad.txt"
    bad.write_text("not a model\n")
    assert run(["eval", "--model", str(bad), "--test", str(data), "-o", str(tmp_path / "e.csv")]) == 1
    assert not (tmp_path / "e.csv").exists()
    assert "header" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = tmp_path / "i.json"
    res = subprocess.run([sys.executable, "-m", "irpdfl", "gen", "--seed", "2", "-o", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and out.exists()
    res = subprocess.run([sys.executable, "-m", "irpdfl", "bogus"], capture_output=True, text=True)
    assert res.returncode == 2
