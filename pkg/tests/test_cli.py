import csv
import json

import numpy as np

from coalbandit.bandit_env import load_instance
from coalbandit.cli import main


def test_simulate_synthetic_and_analyze(tmp_path, capsys):
    out = tmp_path / "sim"
    code = main(["simulate", "--seed", "4", "--synthetic", "cyclic-symmetric", "--algorithm", "metc",
                 "--horizon", "64", "--reps", "2", "--scope", "[[0], [1], [0, 1]]", "--out", str(out)])
    assert code == 0
    assert "6 runs over 3 coalitions" in capsys.readouterr().out
    assert (out / "regrets.csv").exists()

    code = main(["analyze", str(out / "raw_regrets.csv"), "--out", str(tmp_path / "ana")])
    text = capsys.readouterr().out
    # Only three of the 31 coalitions ran and the grand coalition is not among them.
    assert code == 0 and "missing 28 coalitions" in text and "payout:" not in text


def test_simulate_requires_seed(capsys):
    try:
        main(["simulate", "--synthetic", "cyclic-symmetric"])
    except SystemExit as exc:
        assert exc.code == 2
    else:
        raise AssertionError("argparse should reject a missing --seed")


def test_analyze_complete_table(tmp_path, capsys):
    path = tmp_path / "t.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "agent", "mean", "stderr", "num_reps"])
        for row in [(1, 0, 10, 0, 1), (2, 1, 8, 0, 1), (3, 0, 6, 0, 1), (3, 1, 4, 0, 1)]:
            w.writerow(row)
    assert main(["analyze", str(path), "--out", str(tmp_path / "a")]) == 0
    out = capsys.readouterr().out
    # v({0}) = -10, v({1}) = -8, v(N) = -10: Shapley = (-6, -4), payout = (-6, -4).
    assert "shapley: -6 -4" in out
    game = list(csv.DictReader(open(tmp_path / "a" / "game.csv")))
    assert [float(r["value"]) for r in game] == [0.0, -10.0, -8.0, -10.0]


def test_check_table_and_curve(tmp_path, capsys):
    table = tmp_path / "t.csv"
    with open(table, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "agent", "mean", "stderr", "num_reps"])
        for row in [(1, 0, 5, 0.1, 5), (2, 1, 5, 0.1, 5), (3, 0, 6, 0.1, 5), (3, 1, 4, 0.1, 5)]:
            w.writerow(row)
    assert main(["check", "--regrets", str(table), "--out", str(tmp_path / "mm.txt")]) == 1
    lines = (tmp_path / "mm.txt").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("{0,1} | 0 | 6.0±0.1 | {0} | 5.0±0.1")

    curve = tmp_path / "c.csv"
    t = np.arange(1, 513)
    with open(curve, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for ti in t:
            w.writerow([ti, repr(float(np.log(ti)))])
    assert main(["check", "--curve", str(curve)]) == 0
    capsys.readouterr()


def test_instance_command(tmp_path, movielens_dir, capsys):
    assert main(["instance", "--synthetic", "asymmetric-hub", "--horizon", "50", "--out", str(tmp_path / "s.json")]) == 0
    inst = load_instance(tmp_path / "s.json")
    assert inst.num_agents == 6 and inst.horizon == 50
    assert main(["instance", "--movielens", str(movielens_dir), "--attribute", "occupation", "--d", "5",
                 "--max-movies", "60", "--horizon", "20", "--recipe", "--out", str(tmp_path / "m.json")]) == 0
    assert "generator" in json.loads((tmp_path / "m.json").read_text())
    assert load_instance(tmp_path / "m.json").num_agents == 8
    capsys.readouterr()


def test_errors_exit_with_code_two(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"instance": {"kind": "synthetic"}, "reps": 0}))
    assert main(["simulate", "--seed", "1", "--config", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_analyze_agent_count_flag(tmp_path, capsys):
    # Without a manifest the largest mask (3) would suggest a complete 2-agent table.
    path = tmp_path / "t.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "agent", "mean", "stderr", "num_reps"])
        for row in [(1, 0, 10, 0, 1), (2, 1, 8, 0, 1), (3, 0, 6, 0, 1), (3, 1, 4, 0, 1)]:
            w.writerow(row)
    assert main(["analyze", str(path), "--agents", "3"]) == 0
    assert "missing 4 coalitions" in capsys.readouterr().out
    assert main(["analyze", str(path), "--agents", "1"]) == 2
