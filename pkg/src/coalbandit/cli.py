"""Command-line entry point: ``coalbandit {simulate,analyze,check,instance}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .algorithms import ALGORITHMS
from .assumption_checks import (
    RegretCurve,
    check_log_limitation,
    check_more_merrier,
    check_strict_concavity,
    more_merrier_table,
)
from .bandit_env import save_instance
from .coalition_game import (
    axiom_report,
    core_nonempty,
    grand_payout,
    is_convex,
    is_in_core,
    read_regret_table_csv,
    shapley_exact,
    value_from_regrets,
    write_allocation_csv,
    write_game_csv,
)
from .errors import CoalBanditError
from .harness import ExperimentConfig, run_experiment
from .instances import ATTRIBUTES, MovieLensSpec, SyntheticSpec, load_movielens, make_synthetic


def _parse_scope(text: str | None):
    if text is None or text in ("all", "grand"):
        return text
    return json.loads(text)


def cmd_simulate(args) -> int:
    data = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    data["seed"] = args.seed
    if args.synthetic:
        data["instance"] = {"kind": "synthetic", "family": args.synthetic, "noise_std": args.sigma}
    elif args.movielens:
        root = Path(args.movielens)
        data["instance"] = {
            "kind": "movielens",
            "ratings_path": str(root / "u.data"),
            "users_path": str(root / "u.user"),
            "attribute": args.attribute,
            "d": args.d,
            "max_movies": args.max_movies,
            "noise_std": args.sigma,
        }
    elif args.instance_file:
        data["instance"] = {"kind": "file", "path": args.instance_file}
    overrides = {
        "algorithm": args.algorithm,
        "horizon": args.horizon,
        "reps": args.reps,
        "scope": _parse_scope(args.scope),
        "output_dir": args.out,
        "k": args.k,
        "workers": args.workers,
    }
    data.update({key: v for key, v in overrides.items() if v is not None})
    if args.params:
        data["params"] = json.loads(args.params)
    if args.full_scale:
        data["full_scale"] = True
    config = ExperimentConfig.from_dict(data)
    result = run_experiment(config)
    print(f"{result.run_count} runs over {len(result.masks)} coalitions; "
          f"table {'complete' if result.complete else 'incomplete'}")
    for _, report in sorted(result.reports.items()):
        print(report.summary())
    if config.output_dir:
        print(f"artifacts written to {config.output_dir}")
    return 0


def _num_agents(args) -> int | None:
    """``--agents`` or, failing that, the manifest written next to the table."""
    if args.agents is not None:
        return args.agents
    manifest = Path(args.regrets).with_name("manifest.json")
    if manifest.exists():
        return json.loads(manifest.read_text(encoding="utf-8")).get("num_agents")
    return None


def cmd_analyze(args) -> int:
    table = read_regret_table_csv(args.regrets, _num_agents(args))
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    payout = grand_payout(table) if table.present[table.grand_mask] else None
    if not table.complete:
        print(f"table is missing {len(table.missing())} coalitions; only the payout is available")
        if payout is not None:
            print("payout:", " ".join(f"{p:.6g}" for p in payout.payouts))
            if out:
                write_allocation_csv(payout, out / "payout.csv")
        return 0
    game = value_from_regrets(table)
    phi = shapley_exact(game)
    k = args.k if game.samples is not None else 0.0
    print("shapley:", " ".join(f"{p:.6g}" for p in phi.payouts))
    print("payout: ", " ".join(f"{p:.6g}" for p in payout.payouts))
    nonempty, witness = core_nonempty(game)
    print(f"core non-empty: {nonempty}" + (f" (witness {np.round(witness.payouts, 6).tolist()})" if nonempty else ""))
    print(is_convex(game, k=k).summary())
    print(is_in_core(game, payout, k=k).summary())
    for report in axiom_report(game, payout, k=k).values():
        print(report.summary())
    if out:
        write_game_csv(game, out / "game.csv")
        write_allocation_csv(phi, out / "shapley.csv")
        write_allocation_csv(payout, out / "payout.csv")
    return 0


def _read_curve(path: str) -> RegretCurve:
    rows = list(csv.DictReader(open(path, encoding="utf-8")))
    values = np.array([float(r["value"]) for r in rows])
    stderr = np.array([float(r.get("stderr") or 0.0) for r in rows])
    if values[0] != 0.0:
        values = np.concatenate([[0.0], values])
        stderr = np.concatenate([[0.0], stderr])
    return RegretCurve(values, stderr)


def cmd_check(args) -> int:
    failed = False
    if args.regrets:
        report = check_more_merrier(read_regret_table_csv(args.regrets, _num_agents(args)), args.k)
        print(report.summary())
        text = more_merrier_table(report)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        failed |= not report.passed
    if args.curve:
        curve = _read_curve(args.curve)
        for report in (
            check_strict_concavity(curve, k=args.k),
            check_log_limitation(curve, args.c, args.eps, k=args.k),
        ):
            print(report.summary())
            failed |= not report.passed
    return 1 if failed else 0


def cmd_instance(args) -> int:
    if args.synthetic:
        instance = make_synthetic(SyntheticSpec(family=args.synthetic, horizon=args.horizon, noise_std=args.sigma))
    else:
        root = Path(args.movielens)
        spec = MovieLensSpec(
            str(root / "u.data"), str(root / "u.user"), attribute=args.attribute, d=args.d,
            horizon=args.horizon, max_movies=args.max_movies, noise_std=args.sigma, seed=args.seed,
        )
        instance, labels = load_movielens(spec)
        print("agents:", ", ".join(labels))
    save_instance(instance, args.out, explicit=not args.recipe)
    print(f"wrote {instance.name or 'instance'} (M={instance.num_agents}, d={instance.dim}) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coalbandit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment over coalitions and repetitions")
    sim.add_argument("--config", help="JSON experiment config")
    sim.add_argument("--seed", type=int, required=True)
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--synthetic", choices=["cyclic-symmetric", "asymmetric-hub"])
    src.add_argument("--movielens", metavar="DIR", help="directory holding u.data and u.user")
    src.add_argument("--instance-file")
    sim.add_argument("--attribute", choices=ATTRIBUTES, default="gender")
    sim.add_argument("--d", type=int, default=20)
    sim.add_argument("--max-movies", type=int, default=200)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--algorithm", choices=ALGORITHMS)
    sim.add_argument("--params", help="algorithm hyperparameters as JSON")
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--scope", help="'all', 'grand' or a JSON list of coalitions")
    sim.add_argument("--out")
    sim.add_argument("--k", type=float)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--full-scale", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="game-theoretic analysis of a regret table CSV")
    ana.add_argument("regrets")
    ana.add_argument("--agents", type=int, help="number of agents (default: inferred)")
    ana.add_argument("--k", type=float, default=3.0)
    ana.add_argument("--out")
    ana.set_defaults(func=cmd_analyze)

    chk = sub.add_parser("check", help="assumption checks on a regret table or a regret curve")
    chk.add_argument("--regrets", help="regret table CSV (raw or aggregated)")
    chk.add_argument("--agents", type=int, help="number of agents (default: inferred)")
    chk.add_argument("--curve", help="CSV with columns t, value[, stderr]")
    chk.add_argument("--k", type=float, default=0.0)
    chk.add_argument("--c", type=float, default=1.0)
    chk.add_argument("--eps", type=float, default=0.1)
    chk.add_argument("--out", help="write the violation table here")
    chk.set_defaults(func=cmd_check)

    ins = sub.add_parser("instance", help="build and save a problem instance")
    grp = ins.add_mutually_exclusive_group(required=True)
    grp.add_argument("--synthetic", choices=["cyclic-symmetric", "asymmetric-hub"])
    grp.add_argument("--movielens", metavar="DIR")
    ins.add_argument("--attribute", choices=ATTRIBUTES, default="gender")
    ins.add_argument("--d", type=int, default=20)
    ins.add_argument("--max-movies", type=int)
    ins.add_argument("--horizon", type=int, default=1024)
    ins.add_argument("--sigma", type=float, default=1.0)
    ins.add_argument("--seed", type=int, default=0)
    ins.add_argument("--recipe", action="store_true", help="store the generator recipe instead of the actions")
    ins.add_argument("--out", required=True)
    ins.set_defaults(func=cmd_instance)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (CoalBanditError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
