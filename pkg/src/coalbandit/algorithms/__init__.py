"""Single-agent policies and coalition algorithms."""

from __future__ import annotations

from typing import Sequence

from ..bandit_env import ProblemInstance
from ..errors import InvalidConfigError
from ..rng import RngStream
from .base import CoalitionRunResult, coalition_mask, normalize_coalition
from .linear import (
    LinUCBParams,
    default_explore_len,
    greedy_decide,
    linucb_decide,
    run_greedy,
    run_linucb_m,
    run_metc,
)
from .mul import run_mul
from .policies import (
    EpsilonGreedyPolicy,
    ExploreThenCommitPolicy,
    SinglePolicy,
    UCBPolicy,
    decide,
    make_policy,
    run_single,
)
from .pooling import OlsEstimate, PooledDataset, detmax_action, detmax_index, pooled_ols

ALGORITHMS = ("mul+ucb", "mul+etc", "mul+egreedy", "metc", "linucb-m", "greedy")


def run_algorithm(
    name: str,
    coalition: Sequence[int] | int,
    instance: ProblemInstance,
    rng: RngStream,
    params: dict | None = None,
) -> CoalitionRunResult:
    """Dispatch a coalition run by algorithm name (the harness entry point)."""
    params = dict(params or {})
    if name.startswith("mul+"):
        policy_name = name.split("+", 1)[1]
        if policy_name == "ucb":
            params.setdefault("sigma", instance.noise_std)
        return run_mul(make_policy(policy_name, **params), coalition, instance, rng)
    if name == "metc":
        return run_metc(coalition, instance, rng=rng, **params)
    if name == "linucb-m":
        return run_linucb_m(coalition, instance, LinUCBParams(**params), rng)
    if name == "greedy":
        return run_greedy(coalition, instance, rng=rng, **params)
    raise InvalidConfigError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")


__all__ = [
    "ALGORITHMS",
    "CoalitionRunResult",
    "EpsilonGreedyPolicy",
    "ExploreThenCommitPolicy",
    "LinUCBParams",
    "OlsEstimate",
    "PooledDataset",
    "SinglePolicy",
    "UCBPolicy",
    "coalition_mask",
    "decide",
    "default_explore_len",
    "detmax_action",
    "detmax_index",
    "greedy_decide",
    "linucb_decide",
    "make_policy",
    "normalize_coalition",
    "pooled_ols",
    "run_algorithm",
    "run_greedy",
    "run_linucb_m",
    "run_metc",
    "run_mul",
    "run_single",
]
