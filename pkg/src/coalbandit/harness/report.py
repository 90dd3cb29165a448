"""Plot-ready CSV artifacts and the run manifest.

Files written into the output directory:

==========================  ==================================================
``raw_regrets.csv``         mask, agent, rep, regret
``regrets.csv``             mask, agent, mean, stderr, num_reps
``game.csv``                mask, value
``scatter.csv``             agent, label, shapley_mean, shapley_err, payout_mean, payout_err
``identity_line.csv``       x, y: two corners of the ``y = x`` reference line
``shapley.csv``             per-repetition Shapley values averaged
``shapley_mean_game.csv``   Shapley value of the averaged game
``payout.csv``              grand-coalition payouts
``more_merrier.txt``        pipe-separated table of flagged agent-coalition pairs
``assumptions.txt``         one summary line per check
``manifest.json``           config, hashes, run counts and file checksums
==========================  ==================================================

Outputs contain no timestamps, so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..assumption_checks import more_merrier_table
from ..coalition_game import write_allocation_csv, write_game_csv, write_raw_regrets_csv, write_regret_table_csv
from .config import ExperimentConfig

SCATTER_HEADER = ["agent", "label", "shapley_mean", "shapley_err", "payout_mean", "payout_err"]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_scatter(result, path: Path) -> None:
    phi, pay = result.shapley, result.payout
    phi_err = phi.stderr if phi.stderr is not None else np.zeros(len(phi))
    pay_err = pay.stderr if pay.stderr is not None else np.zeros(len(pay))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SCATTER_HEADER)
        for a in range(result.num_agents):
            w.writerow([a, result.labels[a], repr(float(phi.payouts[a])), repr(float(phi_err[a])),
                        repr(float(pay.payouts[a])), repr(float(pay_err[a]))])


def _write_identity(result, path: Path) -> None:
    points = np.concatenate([result.shapley.payouts, result.payout.payouts])
    lo, hi = float(points.min()), float(points.max())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        w.writerow([repr(lo), repr(lo)])
        w.writerow([repr(hi), repr(hi)])


def emit_report(result, directory: str | Path) -> dict:
    """Write every artifact the result supports; returns the manifest."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def target(name: str) -> Path:
        path = out / name
        written.append(path)
        return path

    write_raw_regrets_csv(result.table, target("raw_regrets.csv"))
    write_regret_table_csv(result.table, target("regrets.csv"))
    if result.game is not None:
        write_game_csv(result.game, target("game.csv"))
    if result.payout is not None:
        write_allocation_csv(result.payout, target("payout.csv"), result.labels)
    if result.shapley is not None:
        write_allocation_csv(result.shapley, target("shapley.csv"), result.labels)
        write_allocation_csv(result.shapley_mean_game, target("shapley_mean_game.csv"), result.labels)
    if result.shapley is not None and result.payout is not None:
        _write_scatter(result, target("scatter.csv"))
        _write_identity(result, target("identity_line.csv"))
    if "more_merrier" in result.reports:
        target("more_merrier.txt").write_text(
            more_merrier_table(result.reports["more_merrier"], result.labels), encoding="utf-8"
        )
    lines = [f"{key}: {rep.summary()}" for key, rep in sorted(result.reports.items())]
    target("assumptions.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    expected = len(result.masks) * result.config.reps
    if result.run_count != expected:
        raise AssertionError(f"ran {result.run_count} tasks, expected {expected}")
    manifest = {
        "status": "complete" if result.complete else "incomplete",
        "config": json.loads(result.config.canonical_json()),
        "config_hash": result.config.digest(),
        "instance_digest": result.instance_digest,
        "num_agents": result.num_agents,
        "labels": result.labels,
        "coalitions": len(result.masks),
        "reps": result.config.reps,
        "run_count": result.run_count,
        "expected_run_count": expected,
        "provenance": result.provenance,
        "files": {p.name: _sha256(p) for p in written},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def write_trajectory_csv(run, path: str | Path) -> None:
    """One row per (agent, t): action index, reward and instantaneous gap."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["agent", "t", "action_index", "reward", "gap"])
        for a in run.coalition:
            traj = run.trajectories[a]
            for i in range(len(traj)):
                w.writerow([a, i + 1, int(traj.action_indices[i]), repr(float(traj.rewards[i])),
                            repr(float(traj.gaps[i]))])


def write_failure_manifest(config: ExperimentConfig, directory: str | Path) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"status": "incomplete", "config": json.loads(config.canonical_json()),
                "config_hash": config.digest()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
