"""Coalition algorithms for linear bandits with heterogeneous action sets.

All three algorithms read partner data only through pooled sufficient
statistics (``sum x x^T`` and ``sum x y``), which are symmetric functions of
the anonymized sample multiset.  The ``*_decide`` functions recompute each
decision from a :class:`PooledDataset` and exist so that this property can
be checked against the fast incremental runners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..bandit_env import ProblemInstance
from ..errors import InvalidConfigError, InvalidInputError
from ..rng import RngStream
from .base import CoalitionRunResult, TrajectoryRecorder, draw_noise, normalize_coalition
from .pooling import PooledDataset, design_statistics, detmax_index, solve_ridge

METC_RIDGE = 1e-8


@dataclass(frozen=True)
class LinUCBParams:
    """Self-normalized confidence width.

    ``beta = sigma * sqrt(2 log(1/delta) + log det V - d log ridge) + sqrt(ridge) * theta_bound``
    where ``V = ridge I + sum x x^T`` is the pooled design.  ``sigma=None``
    takes the instance's noise level.
    """

    delta: float = 0.1
    ridge: float = 1.0
    sigma: float | None = None
    theta_bound: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.delta < 1:
            raise InvalidConfigError("delta must lie in (0, 1)")
        if self.ridge <= 0:
            raise InvalidConfigError("LinUCB ridge must be positive")
        if self.theta_bound < 0 or (self.sigma is not None and self.sigma < 0):
            raise InvalidConfigError("sigma and theta_bound must be non-negative")


def linucb_width(params: LinUCBParams, sigma: float, logdet_v: float, dim: int) -> float:
    radicand = 2.0 * math.log(1.0 / params.delta) + logdet_v - dim * math.log(params.ridge)
    return sigma * math.sqrt(max(radicand, 0.0)) + math.sqrt(params.ridge) * params.theta_bound


def _ucb_scores(actions: np.ndarray, theta: np.ndarray, v_inv: np.ndarray, beta: float) -> np.ndarray:
    widths = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", actions, v_inv, actions), 0.0))
    return actions @ theta + beta * widths


def linucb_decide(
    pool: PooledDataset, actions: np.ndarray, params: LinUCBParams, sigma: float
) -> int:
    actions = np.asarray(actions, dtype=float)
    d = actions.shape[1]
    gram, moment = design_statistics(pool.all_samples(), d)
    est = solve_ridge(gram, moment, params.ridge)
    _, logdet = np.linalg.slogdet(est.gram)
    beta = linucb_width(params, sigma, logdet, d)
    return int(np.argmax(_ucb_scores(actions, est.theta_hat, np.linalg.inv(est.gram), beta)))


def greedy_decide(
    pool: PooledDataset, actions: np.ndarray, ridge: float, prior: np.ndarray | None = None
) -> int:
    actions = np.asarray(actions, dtype=float)
    gram, moment = design_statistics(pool.all_samples(), actions.shape[1])
    est = solve_ridge(gram, moment, ridge, prior)
    return int(np.argmax(actions @ est.theta_hat))


class _CoalitionLoop:
    """Shared bookkeeping: noise, recording and pooled statistics."""

    def __init__(self, coalition, instance: ProblemInstance, rng: RngStream):
        self.instance = instance
        self.members = normalize_coalition(coalition, instance.num_agents)
        self.T = instance.horizon
        d = instance.dim
        self.noise = {a: draw_noise(instance, rng, a, self.T) for a in self.members}
        self.recorder = TrajectoryRecorder(instance, self.members, self.T)
        self.gram = np.zeros((d, d))
        self.moment = np.zeros(d)

    def play(self, t: int, choices: dict[int, tuple[int, np.ndarray]]) -> None:
        """Play every member's chosen action at step ``t`` and pool the samples."""
        inst = self.instance
        xs = []
        ys = []
        for a in self.members:
            index, action = choices[a]
            mean = float(action @ inst.theta_star)
            y = mean + self.noise[a][t - 1]
            self.recorder.record(a, t, index, action, y, inst.gaps(a, t)[index])
            xs.append(action)
            ys.append(y)
        X = np.asarray(xs)
        self.gram += X.T @ X
        self.moment += X.T @ np.asarray(ys)

    def result(self, **diagnostics) -> CoalitionRunResult:
        return CoalitionRunResult(self.members, self.recorder.trajectories(), diagnostics)


def run_linucb_m(
    coalition: Sequence[int] | int,
    instance: ProblemInstance,
    params: LinUCBParams | None = None,
    rng: RngStream | None = None,
    *,
    record_gram_eigs: bool = False,
) -> CoalitionRunResult:
    """Every member runs LinUCB on the coalition's pooled data."""
    params = params or LinUCBParams()
    rng = rng or RngStream(0)
    sigma = instance.noise_std if params.sigma is None else params.sigma
    loop = _CoalitionLoop(coalition, instance, rng)
    d = instance.dim
    eye = np.eye(d)
    min_eigs = []
    for t in range(1, loop.T + 1):
        V = loop.gram + params.ridge * eye
        v_inv = np.linalg.inv(V)
        theta = v_inv @ loop.moment
        _, logdet = np.linalg.slogdet(V)
        beta = linucb_width(params, sigma, logdet, d)
        choices = {}
        for a in loop.members:
            actions = instance.action_set(a, t).actions
            index = int(np.argmax(_ucb_scores(actions, theta, v_inv, beta)))
            choices[a] = (index, actions[index])
        loop.play(t, choices)
        if record_gram_eigs:
            min_eigs.append(np.linalg.eigvalsh(loop.gram + params.ridge * eye))
    diag = {"final_gram": loop.gram + params.ridge * eye}
    if record_gram_eigs:
        diag["gram_eigenvalues"] = np.asarray(min_eigs)
    return loop.result(**diag)


def run_greedy(
    coalition: Sequence[int] | int,
    instance: ProblemInstance,
    ridge: float = 1.0,
    rng: RngStream | None = None,
    *,
    warmup: int = 0,
    prior: np.ndarray | None = None,
) -> CoalitionRunResult:
    """Every member plays ``argmax <theta_hat, x>`` with ``theta_hat`` from pooled OLS.

    ``prior`` centres the ridge penalty (default zero, so the first step has
    ``theta_hat = 0`` and the index tie rule picks action 0).  During the
    first ``warmup`` steps action ``(t - 1) mod K`` is played instead.
    """
    if ridge <= 0:
        raise InvalidConfigError("greedy ridge must be positive")
    if warmup < 0:
        raise InvalidConfigError("warmup must be non-negative")
    rng = rng or RngStream(0)
    loop = _CoalitionLoop(coalition, instance, rng)
    eye = np.eye(instance.dim)
    rhs_shift = 0.0 if prior is None else ridge * np.asarray(prior, dtype=float)
    for t in range(1, loop.T + 1):
        theta = np.linalg.solve(loop.gram + ridge * eye, loop.moment + rhs_shift)
        choices = {}
        for a in loop.members:
            actions = instance.action_set(a, t).actions
            if t <= warmup:
                index = (t - 1) % actions.shape[0]
            else:
                index = int(np.argmax(actions @ theta))
            choices[a] = (index, actions[index])
        loop.play(t, choices)
    return loop.result(final_theta=np.linalg.solve(loop.gram + ridge * eye, loop.moment + rhs_shift))


def default_explore_len(horizon: int) -> int:
    """``ceil(T^(2/3))``, computed without floating error at perfect cubes."""
    n = max(1, round(horizon ** (2.0 / 3.0)))
    while n ** 3 < horizon ** 2:
        n += 1
    while n > 1 and (n - 1) ** 3 >= horizon ** 2:
        n -= 1
    return n


def run_metc(
    coalition: Sequence[int] | int,
    instance: ProblemInstance,
    explore_len: int | None = None,
    ridge: float = METC_RIDGE,
    rng: RngStream | None = None,
) -> CoalitionRunResult:
    """Multi-agent explore-then-commit.

    Exploration: each member plays the determinant-maximizing action given
    only its own past actions.  At ``explore_len`` one ridge-OLS estimate
    is formed from every member's samples; afterwards each member plays the
    estimate's argmax on its own action set.
    """
    T = instance.horizon
    if explore_len is None:
        explore_len = default_explore_len(T)
    if not 1 <= explore_len < T:
        raise InvalidConfigError(f"exploration length {explore_len} must lie in [1, T={T})")
    if ridge < 0:
        raise InvalidInputError("ridge must be non-negative")
    rng = rng or RngStream(0)
    loop = _CoalitionLoop(coalition, instance, rng)
    d = instance.dim
    own_gram = {a: np.zeros((d, d)) for a in loop.members}

    for t in range(1, explore_len + 1):
        choices = {}
        for a in loop.members:
            actions = instance.action_set(a, t).actions
            index = detmax_index(actions, own_gram[a])
            choices[a] = (index, actions[index])
            own_gram[a] += np.outer(actions[index], actions[index])
        loop.play(t, choices)

    estimate = solve_ridge(loop.gram.copy(), loop.moment.copy(), ridge)
    theta = estimate.theta_hat
    for t in range(explore_len + 1, T + 1):
        choices = {}
        for a in loop.members:
            actions = instance.action_set(a, t).actions
            index = int(np.argmax(actions @ theta))
            choices[a] = (index, actions[index])
        loop.play(t, choices)

    return loop.result(theta_hat=theta, explore_len=explore_len, ridge=ridge)
