"""Buffer meta-algorithm: one single-agent policy drives a whole coalition.

The policy advances on a virtual clock ``tau`` and is fed rewards from
per-action buffers.  Whenever it asks for an action whose buffer is empty,
every coalition member plays that action in real time and the ``m``
rewards refill the buffer.
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

from ..bandit_env import ProblemInstance
from ..errors import UnsupportedInstanceError
from ..rng import RngStream
from .base import CoalitionRunResult, TrajectoryRecorder, draw_noise, normalize_coalition
from .policies import SinglePolicy, checked_select


def run_mul(
    sin: SinglePolicy,
    coalition: Sequence[int] | int,
    instance: ProblemInstance,
    rng: RngStream,
) -> CoalitionRunResult:
    if not instance.fixed_actions:
        raise UnsupportedInstanceError("the buffer meta-algorithm needs a fixed common action set")
    members = normalize_coalition(coalition, instance.num_agents)
    m = len(members)
    T = instance.horizon
    aset = instance.action_set(members[0], 1)
    K = aset.size
    means = instance.mean_rewards(members[0], 1)
    gaps = instance.gaps(members[0], 1)

    policy = sin.fresh()
    policy.reset(K, rng.child(agent=members[0], purpose="policy").generator())
    noise = {a: draw_noise(instance, rng, a, T) for a in members}
    recorder = TrajectoryRecorder(instance, members, T)

    buffers = [deque() for _ in range(K)]
    filled = 0
    consumed = 0
    current = checked_select(policy, K)
    for t in range(1, T + 1):
        action = aset.actions[current]
        rewards = [float(means[current]) + noise[a][t - 1] for a in members]
        for a, y in zip(members, rewards):
            recorder.record(a, t, current, action, y, gaps[current])
        # Only reached when the buffer of `current` is empty.
        buffers[current].extend(rewards)
        filled += m
        while buffers[current]:
            y = buffers[current].popleft()
            policy.update(current, y)
            consumed += 1
            current = checked_select(policy, K)

    residue = sum(len(b) for b in buffers)
    return CoalitionRunResult(
        coalition=members,
        trajectories=recorder.trajectories(),
        diagnostics={
            "tau_bar": consumed,
            "filled": filled,
            "buffer_residue": residue,
            "buffer_residue_by_action": [len(b) for b in buffers],
            "num_actions": K,
        },
    )
