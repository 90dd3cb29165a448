"""Synthetic 25-armed instances with block-structured action sets.

Actions are the 25 standard basis vectors of R^25, grouped into five
blocks ``A_1..A_5`` of five consecutive actions.  Within every block the
mean rewards run 0.7, 0.6, 0.5, 0.4, 0.3, so each block contains exactly
one optimal action.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..bandit_env import ProblemInstance, StaticProfile
from ..errors import InvalidConfigError

FAMILIES = ("cyclic-symmetric", "asymmetric-hub")
NUM_BLOCKS = 5
BLOCK_SIZE = 5
BLOCK_MEANS = (0.7, 0.6, 0.5, 0.4, 0.3)
HUB_ACTIONS = (1, 7, 13, 19, 25)  # 1-based, one per block


@dataclass(frozen=True)
class SyntheticSpec:
    family: str = "cyclic-symmetric"
    horizon: int = 1024
    noise_std: float = 1.0
    d: int = 25
    K: int = 25

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidConfigError(f"unknown synthetic family {self.family!r}; expected one of {FAMILIES}")
        if self.d != NUM_BLOCKS * BLOCK_SIZE or self.K != self.d:
            raise InvalidConfigError("the block construction needs d = K = 25")
        if self.horizon < 1 or self.noise_std < 0:
            raise InvalidConfigError("horizon must be positive and noise_std non-negative")

    @property
    def num_agents(self) -> int:
        return 5 if self.family == "cyclic-symmetric" else 6

    def to_dict(self) -> dict:
        return asdict(self)


def block_theta(d: int = 25) -> np.ndarray:
    """``theta_i`` for 1-based ``i``: 0.7, 0.6, 0.5, 0.4, 0.3 as ``i mod 5`` is 1, 2, 3, 4, 0."""
    i = np.arange(1, d + 1)
    return np.array([BLOCK_MEANS[(k - 1) % NUM_BLOCKS] for k in i])


def block(j: int) -> list[int]:
    """0-based action indices of block ``A_j`` (``j`` is 1-based)."""
    if not 1 <= j <= NUM_BLOCKS:
        raise InvalidConfigError(f"block index {j} outside 1..{NUM_BLOCKS}")
    return list(range((j - 1) * BLOCK_SIZE, j * BLOCK_SIZE))


def _basis(indices) -> np.ndarray:
    return np.eye(NUM_BLOCKS * BLOCK_SIZE)[sorted(indices)]


def make_cyclic_synthetic(spec: SyntheticSpec | None = None) -> ProblemInstance:
    """Five agents; agent ``a`` owns ``A_{a+1}`` and ``A_{(a+1) mod 5 + 1}``.

    Neighbouring agents share one block, so every agent has ten actions and
    the instance is invariant under rotating agents together with blocks.
    """
    spec = SyntheticSpec() if spec is None else spec
    if spec.family != "cyclic-symmetric":
        raise InvalidConfigError("make_cyclic_synthetic needs family='cyclic-symmetric'")
    sets = [_basis(block(a + 1) + block((a + 1) % NUM_BLOCKS + 1)) for a in range(NUM_BLOCKS)]
    return ProblemInstance(
        block_theta(spec.d), StaticProfile(sets), spec.horizon, spec.noise_std,
        name="cyclic-symmetric", generator={"name": "cyclic-symmetric", "params": spec.to_dict()},
    )


def make_asymmetric_synthetic(spec: SyntheticSpec | None = None) -> ProblemInstance:
    """Six agents: agents 1..5 own disjoint blocks, agent 0 one action from each."""
    spec = SyntheticSpec(family="asymmetric-hub") if spec is None else spec
    if spec.family != "asymmetric-hub":
        raise InvalidConfigError("make_asymmetric_synthetic needs family='asymmetric-hub'")
    hub = _basis([i - 1 for i in HUB_ACTIONS])
    sets = [hub] + [_basis(block(j)) for j in range(1, NUM_BLOCKS + 1)]
    return ProblemInstance(
        block_theta(spec.d), StaticProfile(sets), spec.horizon, spec.noise_std,
        name="asymmetric-hub", generator={"name": "asymmetric-hub", "params": spec.to_dict()},
    )


def make_synthetic(spec: SyntheticSpec) -> ProblemInstance:
    if spec.family == "cyclic-symmetric":
        return make_cyclic_synthetic(spec)
    return make_asymmetric_synthetic(spec)
