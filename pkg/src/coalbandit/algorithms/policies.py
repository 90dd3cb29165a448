"""Single-agent finite-arm policies and the single-agent runner.

A policy sees only arm indices and rewards.  It is driven incrementally
(``select`` then ``update``) for speed, but its state is a deterministic
function of the history it was fed and its own random stream, so
:func:`decide` can rebuild any decision from a history alone.
"""

from __future__ import annotations

import copy
import math
from typing import Sequence

import numpy as np

from ..bandit_env import ProblemInstance
from ..errors import InvalidConfigError, InvalidInputError, ProtocolViolationError
from ..rng import RngStream
from .base import TrajectoryRecorder, draw_noise


class SinglePolicy:
    """Black-box single-agent decision maker over ``K`` indexed arms."""

    name = "policy"

    def __init__(self) -> None:
        self.num_actions = 0
        self.counts = np.zeros(0, dtype=np.int64)
        self.sums = np.zeros(0)
        self.steps = 0
        self.rng: np.random.Generator | None = None

    def params(self) -> dict:
        return {}

    def fresh(self) -> "SinglePolicy":
        clone = copy.copy(self)
        clone.reset(0, None)
        return clone

    def reset(self, num_actions: int, rng: np.random.Generator | None) -> None:
        self.num_actions = num_actions
        self.counts = np.zeros(num_actions, dtype=np.int64)
        self.sums = np.zeros(num_actions)
        self.steps = 0
        self.rng = rng

    def select(self) -> int:
        raise NotImplementedError

    def update(self, index: int, reward: float) -> None:
        self.counts[index] += 1
        self.sums[index] += reward
        self.steps += 1

    def _first_unpulled(self) -> int | None:
        zero = np.flatnonzero(self.counts == 0)
        return int(zero[0]) if zero.size else None

    def _means(self) -> np.ndarray:
        return self.sums / np.maximum(self.counts, 1)

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class UCBPolicy(SinglePolicy):
    """UCB1-style index: empirical mean + ``sigma * sqrt(alpha * log(t) / n)``.

    Each arm is pulled once first, in index order.  ``sigma`` is the reward
    noise scale; with ``sigma=0`` the rule degenerates to greedy on means.
    """

    name = "ucb"

    def __init__(self, sigma: float = 1.0, alpha: float = 2.0):
        super().__init__()
        if sigma < 0 or alpha <= 0:
            raise InvalidConfigError("UCB needs sigma >= 0 and alpha > 0")
        self.sigma = float(sigma)
        self.alpha = float(alpha)

    def params(self) -> dict:
        return {"sigma": self.sigma, "alpha": self.alpha}

    def select(self) -> int:
        first = self._first_unpulled()
        if first is not None:
            return first
        bonus = self.sigma * np.sqrt(self.alpha * math.log(self.steps) / self.counts)
        return int(np.argmax(self._means() + bonus))


class ExploreThenCommitPolicy(SinglePolicy):
    """Round-robin for ``explore_per_arm`` pulls of every arm, then commit."""

    name = "etc"

    def __init__(self, explore_per_arm: int = 10):
        super().__init__()
        if explore_per_arm < 1:
            raise InvalidConfigError("explore_per_arm must be positive")
        self.explore_per_arm = int(explore_per_arm)
        self._committed: int | None = None

    def params(self) -> dict:
        return {"explore_per_arm": self.explore_per_arm}

    def reset(self, num_actions: int, rng: np.random.Generator | None) -> None:
        super().reset(num_actions, rng)
        self._committed = None

    def select(self) -> int:
        if self.steps < self.explore_per_arm * self.num_actions:
            return self.steps % self.num_actions
        if self._committed is None:
            self._committed = int(np.argmax(self._means()))
        return self._committed


class EpsilonGreedyPolicy(SinglePolicy):
    """Explore uniformly with probability ``epsilon`` (or ``min(1, c K / t)``).

    One uniform variate is drawn per decision, and one more when exploring.
    """

    name = "egreedy"

    def __init__(self, epsilon: float = 0.1, decay: float | None = None):
        super().__init__()
        if not 0 <= epsilon <= 1:
            raise InvalidConfigError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)
        self.decay = decay

    def params(self) -> dict:
        return {"epsilon": self.epsilon, "decay": self.decay}

    def select(self) -> int:
        first = self._first_unpulled()
        if first is not None:
            return first
        if self.rng is None:
            raise InvalidConfigError("epsilon-greedy needs a random stream")
        eps = self.epsilon
        if self.decay is not None:
            eps = min(1.0, self.decay * self.num_actions / max(self.steps, 1))
        if self.rng.random() < eps:
            return int(self.rng.integers(self.num_actions))
        return int(np.argmax(self._means()))


POLICIES = {
    UCBPolicy.name: UCBPolicy,
    ExploreThenCommitPolicy.name: ExploreThenCommitPolicy,
    EpsilonGreedyPolicy.name: EpsilonGreedyPolicy,
}


def make_policy(name: str, **params) -> SinglePolicy:
    try:
        cls = POLICIES[name]
    except KeyError:
        raise InvalidConfigError(
            f"unknown single-agent policy {name!r}; choose from {sorted(POLICIES)}"
        ) from None
    return cls(**params)


def decide(
    policy: SinglePolicy,
    history: Sequence[tuple[int, float]],
    num_actions: int,
    rng: np.random.Generator | None = None,
) -> int:
    """Next action of ``policy`` after ``history`` of ``(index, reward)`` pairs.

    Rebuilds the policy from scratch, so the answer depends on nothing but
    the history (and the policy's own stream, replayed from its start).
    """
    p = policy.fresh()
    p.reset(num_actions, rng)
    for index, reward in history:
        p.select()
        p.update(index, reward)
    return p.select()


def checked_select(policy: SinglePolicy, num_actions: int) -> int:
    index = policy.select()
    if not 0 <= index < num_actions:
        raise ProtocolViolationError(
            f"{policy!r} chose action {index} outside the {num_actions}-action set"
        )
    return index


def run_single(
    policy: SinglePolicy,
    instance: ProblemInstance,
    agent: int,
    horizon: int,
    rng: RngStream,
):
    """Play ``policy`` alone as ``agent`` for ``horizon`` steps.

    Horizons past ``instance.horizon`` are allowed when the agent's action set
    is static; the set is simply reused.
    """
    if horizon < 1:
        raise InvalidInputError("horizon must be positive")
    if not 0 <= agent < instance.num_agents:
        raise InvalidInputError(f"agent {agent} outside [0, {instance.num_agents})")
    if horizon > instance.horizon and not instance.profile.is_static:
        raise InvalidInputError("horizon beyond T needs a static action set")

    num_actions = instance.action_set(agent, 1).size
    sin = policy.fresh()
    sin.reset(num_actions, rng.child(agent=agent, purpose="policy").generator())
    noise = draw_noise(instance, rng, agent, horizon)
    recorder = TrajectoryRecorder(instance, [agent], horizon)

    for t in range(1, horizon + 1):
        aset = instance.action_set(agent, t)
        if aset.size != num_actions:
            raise ProtocolViolationError("finite-arm policies need a constant number of actions")
        index = checked_select(sin, num_actions)
        reward = float(instance.mean_rewards(agent, t)[index]) + noise[t - 1]
        sin.update(index, reward)
        recorder.record(agent, t, index, aset.actions[index], reward, instance.gaps(agent, t)[index])

    return recorder.trajectories()[agent]
