import json
import math
import subprocess
import sys

import pytest

from lapbc.cli import main
from lapbc.graph import random_graph, save_graph


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_inspect_line(capsys):
    code, out, _ = run(capsys, "inspect", "--graph", "line-Z", "--levels", "5")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "bounded" and rep["result"]["sup_deg"] == 2.0
    assert rep["config"]["levels"] == 5 and "tolerances" in rep and rep["command"] == "inspect"


def test_sc_fast_tree(capsys):
    code, out, _ = run(capsys, "sc", "--graph", "radial-tree:d=2^n", "--t", "1.0", "--levels", "8")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "incomplete" and rep["result"]["delta"] > 0
    assert rep["result"]["radial_tree_criterion"]["verdict"] == "not-SC"


def test_example4(capsys):
    code, out, _ = run(capsys, "example4", "--rho", "0.5", "--window", "50")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass"
    assert abs(rep["result"]["lam"] - 0.9624236501) <= 1e-10


@pytest.mark.parametrize("argv", [
    ["spectrum", "--graph", "line-Z", "--levels", "3"],
    ["heat", "--graph", "regular-tree:k=3", "--levels", "3", "--t", "0.5"],
    ["harmonic", "--graph", "fm-tree:k=3,q=0.5", "--levels", "10"],
    ["metric", "--graph", "line-Z", "--levels", "2"],
    ["cheeger", "--graph", "regular-tree:k=3", "--levels", "2"],
    ["appendixA", "--levels", "30"],
])
def test_commands_run(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["command"] == argv[0]


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass"


def test_graph_file(capsys, tmp_path, rng):
    p = tmp_path / "g.json"
    save_graph(random_graph(rng, 6, 0.6, connected=True), p)
    code, out, _ = run(capsys, "cheeger", "--graph", str(p))
    assert code == 0 and json.loads(out)["result"]["alpha"] > 0


def test_determinism(capsys, tmp_path):
    outs = []
    path = tmp_path / "r.json"
    for _ in range(2):
        assert main(["sc", "--graph", "regular-tree:k=3", "--levels", "6", "--seed", "7",
                     "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_csv(capsys):
    code, out, _ = run(capsys, "sc", "--graph", "regular-tree:k=3", "--levels", "4",
                       "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "level,value" and len(lines) == 5
    assert all(math.isfinite(float(v)) for v in lines[-1].split(","))


def test_exit_validation(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vertices": [{"id": "a", "m": -1.0, "c": 0.0}], "edges": []}))
    assert run(capsys, "inspect", "--graph", str(p))[0] == 2
    p.write_text("{not json")
    assert run(capsys, "inspect", "--graph", str(p))[0] == 2


def test_exit_strict(capsys):
    argv = ["sc", "--graph", "radial-tree:d=(n+1)^2", "--levels", "4"]
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["verdict"] == "inconclusive"
    assert run(capsys, *argv, "--strict")[0] == 3


def test_exit_usage(capsys):
    assert run(capsys, "bogus")[0] == 64
    assert run(capsys, "sc")[0] == 64
    assert run(capsys, "sc", "--graph", "no-such-family")[0] == 64
    assert run(capsys, "sc", "--graph", "line-Z", "--levels", "0")[0] == 64


def test_exit_io(capsys, tmp_path):
    assert run(capsys, "inspect", "--graph", str(tmp_path / "missing.json"))[0] == 74
    out = tmp_path / "nodir" / "x.json"
    assert run(capsys, "inspect", "--graph", "line-Z", "--out", str(out))[0] == 74


def test_module_entry():
    r = subprocess.run([sys.executable, "-m", "lapbc.cli", "inspect", "--graph", "line-Z",
                        "--levels", "2"], capture_output=True, text=True, timeout=60)
    assert r.returncode == 0 and json.loads(r.stdout)["verdict"] == "bounded"
