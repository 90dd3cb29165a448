from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..bandit_env import ProblemInstance, Trajectory
from ..errors import InvalidInputError


def normalize_coalition(coalition: Sequence[int] | int, num_agents: int) -> tuple[int, ...]:
    """Sorted member tuple from an iterable of agents or a bitmask."""
    if isinstance(coalition, (int, np.integer)):
        members = tuple(a for a in range(num_agents) if (int(coalition) >> a) & 1)
    else:
        members = tuple(sorted(set(int(a) for a in coalition)))
    if not members:
        raise InvalidInputError("coalition must be non-empty")
    if members[0] < 0 or members[-1] >= num_agents:
        raise InvalidInputError(f"coalition {members} has agents outside [0, {num_agents})")
    return members


def coalition_mask(members: Sequence[int]) -> int:
    mask = 0
    for a in members:
        mask |= 1 << a
    return mask


@dataclass
class CoalitionRunResult:
    """Trajectories of every coalition member plus algorithm diagnostics."""

    coalition: tuple[int, ...]
    trajectories: dict[int, Trajectory]
    diagnostics: dict = field(default_factory=dict)

    def regret_curve(self, agent: int) -> np.ndarray:
        return self.trajectories[agent].regret_curve

    def final_regret(self, agent: int) -> float:
        gaps = self.trajectories[agent].gaps
        return float(gaps.sum())

    def final_regrets(self) -> dict[int, float]:
        return {a: self.final_regret(a) for a in self.coalition}

    @property
    def total_regret(self) -> float:
        return float(sum(self.final_regrets().values()))


class TrajectoryRecorder:
    """Fills per-agent columns during a run and emits :class:`Trajectory` objects."""

    def __init__(self, instance: ProblemInstance, members: Sequence[int], horizon: int):
        self.instance = instance
        self.members = tuple(members)
        self.horizon = horizon
        d = instance.dim
        self.indices = {a: np.zeros(horizon, dtype=np.int64) for a in members}
        self.actions = {a: np.zeros((horizon, d)) for a in members}
        self.rewards = {a: np.zeros(horizon) for a in members}
        self.gaps = {a: np.zeros(horizon) for a in members}

    def record(self, agent: int, t: int, index: int, action: np.ndarray, reward: float, gap: float):
        i = t - 1
        self.indices[agent][i] = index
        self.actions[agent][i] = action
        self.rewards[agent][i] = reward
        self.gaps[agent][i] = gap

    def trajectories(self) -> dict[int, Trajectory]:
        return {
            a: Trajectory(a, self.indices[a], self.actions[a], self.rewards[a], self.gaps[a])
            for a in self.members
        }


def draw_noise(instance: ProblemInstance, rng, agent: int, horizon: int) -> np.ndarray:
    """The agent's whole noise sequence; one standard normal per time-step."""
    gen = rng.child(agent=agent, purpose="noise").generator()
    return instance.noise_std * gen.standard_normal(horizon)
