import csv
import io
import os
import subprocess
import sys

import pytest

from ipse.cli import main, read_weights
from ipse.features import FEATURE_NAMES

DATA = os.path.join(os.path.dirname(__file__), "data")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_features_command(capsys):
    code, out, _ = run(capsys, "features", "--board", os.path.join(DATA, "o_board.txt"),
                       "--piece", "O", "--rotation", "0", "--column", "0", "--header")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == list(FEATURE_NAMES)
    assert [float(v) for v in rows[1]] == [0.5, 0.0, 20.0, 10.0, 0.0, 0.0, 0.0, 0.0]


def test_features_line_clear(capsys):
    code, out, _ = run(capsys, "features", "--board", os.path.join(DATA, "near_full.txt"),
                       "--piece", "I", "--rotation", "1", "--column", "0")
    assert code == 0
    values = [float(v) for v in out.strip().split(",")]
    assert values[1] == 1.0  # one line, one piece cell in it


def test_features_illegal_placement(capsys):
    code, _, err = run(capsys, "features", "--board", os.path.join(DATA, "o_board.txt"),
                       "--piece", "O", "--rotation", "0", "--column", "9")
    assert code == 2 and "error" in err


def test_eval_command(capsys, tmp_path):
    w = tmp_path / "w.csv"
    w.write_text("-12.63,6.60,-9.22,-19.77,-13.08,-10.49,-1.61,-24.04\n")
    code, out, _ = run(capsys, "eval", "--weights", str(w), "--games", "2", "--seed", "5",
                       "--step-cap", "3000")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["mean_score", "std_score", "games", "capped_games"]
    assert rows[1][2] == "2"
    _, again, _ = run(capsys, "eval", "--weights", str(w), "--games", "2", "--seed", "5",
                      "--step-cap", "3000")
    assert again == out


def test_read_weights_from_weights_csv(tmp_path):
    header = ["variant", "replication", "iteration", "phase", "lambda"] + [
        f"beta_{n}" for n in FEATURE_NAMES] + ["rescaled_flag"]
    p = tmp_path / "weights.csv"
    p.write_text(",".join(header) + "\n" + "ipse,0,1,M,0.5," + ",".join(["1"] * 8) + ",1\n"
                 + "ipse,0,2,M,0.2," + ",".join(str(i) for i in range(8)) + ",1\n")
    assert list(read_weights(p)) == list(range(8))
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n")
    with pytest.raises(ValueError):
        read_weights(bad)


def test_lfd_command(capsys):
    code, out, _ = run(capsys, "lfd", "--alpha", "0.05", "--seed", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["feature"] for r in rows] == list(FEATURE_NAMES)
    assert all(r["direction"] in ("1", "-1") for r in rows)


def test_lfd_command_cap(capsys):
    code, out, err = run(capsys, "lfd", "--max-iterations", "2")
    assert code == 1 and "cap" in err
    assert "0" in {r["direction"] for r in csv.DictReader(io.StringIO(out))}


def test_run_command(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("variants = m_stew_known_directions\nreplications = 1\ntotal_iterations = 4\n"
                   "eval_every = 2\neval_games = 1\neval_step_cap = 500\nM = 2\nT = 2\n")
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "run", "--config", str(cfg), "--out", str(out_dir), "--seed", "0x10",
                       "--replications", "2")
    assert code == 0
    assert (out_dir / "traces" / "m_stew_known_directions_rep1.csv").exists()
    assert "learning_curve.csv" in out


def test_run_command_bad_config(capsys, tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("iterations = 4\n")
    code, _, err = run(capsys, "run", "--config", str(cfg), "--out", str(tmp_path / "o"))
    assert code == 2 and "iterations" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ipse", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "features" in res.stdout
