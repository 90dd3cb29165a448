"""Coalition enumeration, repeated runs and aggregation into a game."""

from __future__ import annotations

import logging
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import __version__
from ..algorithms import run_algorithm
from ..assumption_checks import (
    AssumptionReport,
    RegretCurve,
    check_log_limitation,
    check_more_merrier,
    check_strict_concavity,
    default_log_constant,
)
from ..bandit_env import ProblemInstance, load_instance
from ..coalition_game import (
    EXACT_LIMIT,
    Allocation,
    RegretTable,
    TUGame,
    ViolationReport,
    axiom_report,
    grand_payout,
    is_convex,
    is_in_core,
    shapley_exact,
    shapley_mc,
    value_from_regrets,
)
from ..coalition_game.game import _stderr
from ..errors import InvalidConfigError, InvalidInputError, RunFailedError
from ..instances import MovieLensSpec, SyntheticSpec, build_movielens, make_synthetic
from ..rng import RngStream
from .config import FULL_SCALE_AGENT_STEPS, ExperimentConfig

log = logging.getLogger(__name__)

MAX_ENUMERATED_AGENTS = 16


def enumerate_coalitions(num_agents: int, scope: str | Sequence = "all") -> list[int]:
    """Coalition bitmasks in ascending order.

    ``scope`` is ``"all"`` (every non-empty coalition), ``"grand"`` or an
    explicit list of coalitions given as masks or member lists.
    """
    if num_agents < 1:
        raise InvalidConfigError("need at least one agent")
    grand = (1 << num_agents) - 1
    if scope == "all":
        if num_agents > MAX_ENUMERATED_AGENTS:
            raise InvalidConfigError(
                f"{num_agents} agents give {grand} coalitions; pass an explicit coalition list"
            )
        return list(range(1, grand + 1))
    if scope == "grand":
        return [grand]
    masks = set()
    for item in scope:
        if isinstance(item, (int, np.integer)):
            mask = int(item)
        else:
            members = [int(a) for a in item]
            if any(not 0 <= a < num_agents for a in members):
                raise InvalidConfigError(f"coalition {members} names an unknown agent")
            mask = sum(1 << a for a in set(members))
        if not 1 <= mask <= grand:
            raise InvalidConfigError(f"coalition mask {mask} outside [1, {grand}]")
        masks.add(mask)
    return sorted(masks)


def build_instance(config: ExperimentConfig) -> tuple[ProblemInstance, list[str]]:
    spec = dict(config.instance)
    kind = spec.pop("kind")
    if kind == "synthetic":
        family = spec.pop("family", "cyclic-symmetric")
        noise = float(spec.pop("noise_std", spec.pop("sigma", 1.0)))
        if spec:
            raise InvalidConfigError(f"unknown synthetic instance keys {sorted(spec)}")
        syn = SyntheticSpec(family=family, horizon=config.horizon or 1024, noise_std=noise)
        instance = make_synthetic(syn)
        return instance, [str(a) for a in range(instance.num_agents)]
    if kind == "movielens":
        if config.horizon is not None:
            spec["horizon"] = config.horizon
        spec["reps"] = config.reps
        spec.setdefault("seed", config.seed)
        data = build_movielens(MovieLensSpec.from_dict(spec))
        return data.instance, list(data.labels)
    instance = load_instance(spec["path"])
    if config.horizon is not None:
        instance = instance.with_horizon(config.horizon)
    labels = spec.get("labels") or [str(a) for a in range(instance.num_agents)]
    return instance, list(labels)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    labels: list[str]
    instance_digest: str
    masks: list[int]
    table: RegretTable
    run_count: int
    game: TUGame | None = None
    shapley: Allocation | None = None  # per-repetition Shapley, averaged
    shapley_mean_game: Allocation | None = None  # Shapley of the averaged game
    payout: Allocation | None = None
    reports: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def num_agents(self) -> int:
        return self.table.num_agents

    @property
    def complete(self) -> bool:
        return self.table.complete


# worker-side state, set once per process
_STATE: dict = {}


def _init_worker(instance, algorithm, params, seed) -> None:
    _STATE.update(instance=instance, algorithm=algorithm, params=params, seed=seed)


def _run_task(task: tuple[int, int]):
    mask, rep = task
    inst = _STATE["instance"]
    members = [a for a in range(inst.num_agents) if mask >> a & 1]
    rng = RngStream(_STATE["seed"]).for_run(mask, rep)
    try:
        result = run_algorithm(_STATE["algorithm"], members, inst, rng, _STATE["params"])
    except Exception as exc:  # re-raised with (mask, rep) context
        raise RunFailedError(mask, rep, exc) from exc
    regrets = np.array([result.final_regret(a) for a in members])
    curve = result.regret_curve(members[0]) if len(members) == 1 else None
    return mask, rep, regrets, curve


def agent_steps(num_agents: int, masks: Sequence[int], horizon: int, reps: int) -> int:
    return reps * horizon * sum(bin(m).count("1") for m in masks)


def _safe(name: str, fn) -> AssumptionReport | ViolationReport | None:
    try:
        return fn()
    except InvalidInputError as exc:
        log.info("skipping %s: %s", name, exc)
        return None


def run_experiment(config: ExperimentConfig, instance: ProblemInstance | None = None,
                   labels: Sequence[str] | None = None) -> ExperimentResult:
    """Run every (coalition, repetition) pair and derive the game-theoretic summaries.

    ``instance`` bypasses ``config.instance`` (used by tests and the API).
    Artifacts are written when ``config.output_dir`` is set.
    """
    if instance is None:
        instance, built_labels = build_instance(config)
        labels = labels or built_labels
    elif config.horizon is not None and config.horizon != instance.horizon:
        instance = instance.with_horizon(config.horizon)
    M = instance.num_agents
    labels = list(labels) if labels is not None else [str(a) for a in range(M)]
    masks = enumerate_coalitions(M, config.scope)
    T = instance.horizon
    steps = agent_steps(M, masks, T, config.reps)
    if steps > FULL_SCALE_AGENT_STEPS and not config.full_scale:
        raise InvalidConfigError(
            f"{steps} agent-steps exceed the desk-scale limit {FULL_SCALE_AGENT_STEPS}; "
            "set full_scale to run anyway"
        )

    tasks = [(mask, rep) for mask in masks for rep in range(config.reps)]
    samples = np.full((config.reps, 2**M, M), np.nan)
    present = np.zeros(2**M, dtype=bool)
    singles: dict[int, list] = {}
    init = (instance, config.algorithm, config.params, config.seed)

    def collect(outputs):
        for mask, rep, regrets, curve in outputs:
            members = [a for a in range(M) if mask >> a & 1]
            samples[rep, mask, members] = regrets
            present[mask] = True
            if curve is not None:
                singles.setdefault(members[0], [None] * config.reps)[rep] = curve

    try:
        if config.workers > 1:
            with ProcessPoolExecutor(config.workers, initializer=_init_worker, initargs=init) as pool:
                collect(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * config.workers))))
        else:
            _init_worker(*init)
            collect(map(_run_task, tasks))
    except RunFailedError:
        if config.output_dir:
            from .report import write_failure_manifest

            write_failure_manifest(config, config.output_dir)
        raise

    table = RegretTable.from_samples(M, samples, present, labels)
    result = ExperimentResult(
        config=config,
        labels=labels,
        instance_digest=instance.digest(),
        masks=masks,
        table=table,
        run_count=len(tasks),
        provenance={
            "config_hash": config.digest(),
            "seed": config.seed,
            "coalbandit": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    )
    k = config.k
    if present[(1 << M) - 1]:
        result.payout = grand_payout(table)
    if table.complete:
        game = value_from_regrets(table)
        result.game = game
        if config.shapley == "exact" and M <= EXACT_LIMIT:
            exact = shapley_exact(game)
            per_rep = exact.samples
            result.shapley_mean_game = Allocation(exact.payouts, "shapley-exact")
            result.shapley = Allocation(
                per_rep.mean(axis=0), "shapley-exact", stderr=_stderr(per_rep, axis=0), samples=per_rep,
            )
        else:
            mc = shapley_mc(game, config.mc_perms, RngStream(config.seed, purpose="shapley"))
            result.shapley = result.shapley_mean_game = mc
        result.reports["more_merrier"] = check_more_merrier(table, k)
        result.reports["convexity"] = is_convex(game, k=k if config.reps > 1 else 0.0, max_witnesses=100)
        if result.payout is not None and config.reps > 1:
            result.reports["payout_core"] = is_in_core(game, result.payout, k=k)
            for name, rep in axiom_report(game, result.payout, k=k).items():
                result.reports[f"payout_{name}"] = rep

    for a, runs in sorted(singles.items()):
        curve = RegretCurve.from_samples(np.stack(runs))
        result.curves[a] = curve
        K = instance.action_set(a, 1).size
        conc = _safe("concavity", lambda: check_strict_concavity(curve))
        if conc is not None:
            result.reports[f"concavity_agent{a}"] = conc
        logl = _safe("log limitation", lambda: check_log_limitation(curve, default_log_constant(K)))
        if logl is not None:
            result.reports[f"log_limitation_agent{a}"] = logl

    if config.output_dir:
        from .report import emit_report

        emit_report(result, config.output_dir)
    return result
