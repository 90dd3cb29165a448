"""Linear bandit problem instances, reward generation and regret accounting.

An instance is a parameter vector ``theta_star`` together with an action
profile assigning a finite :class:`ActionSet` to every ``(agent, t)`` pair,
``t`` running from 1 to the horizon.  Rewards are ``<theta_star, x>`` plus
Gaussian noise with standard deviation ``noise_std``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidInputError, ProtocolViolationError

INSTANCE_FORMAT = "coalbandit-instance/1"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ActionSet:
    """Finite, ordered set of actions; row ``i`` is action ``i``."""

    actions: np.ndarray

    def __post_init__(self) -> None:
        actions = np.atleast_2d(np.asarray(self.actions, dtype=float))
        if actions.ndim != 2 or actions.shape[0] < 1:
            raise InvalidInputError("an action set needs at least one action")
        object.__setattr__(self, "actions", _frozen(actions))

    @property
    def size(self) -> int:
        return self.actions.shape[0]

    @property
    def dim(self) -> int:
        return self.actions.shape[1]

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, index: int) -> np.ndarray:
        return self.actions[index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActionSet):
            return NotImplemented
        return self.actions.shape == other.actions.shape and bool(
            np.array_equal(self.actions, other.actions)
        )

    def __hash__(self) -> int:
        return hash(self.actions.tobytes())

    def index_of(self, action: np.ndarray) -> int | None:
        """Lowest index whose action equals ``action`` exactly, else None."""
        hits = np.flatnonzero(np.all(self.actions == np.asarray(action, dtype=float), axis=1))
        return int(hits[0]) if hits.size else None


class ActionProfile:
    """Maps ``(agent, t)`` to an :class:`ActionSet`."""

    num_agents: int
    dim: int
    horizon: int | None  # None: the same sets are valid for every t

    def action_set(self, agent: int, t: int) -> ActionSet:
        raise NotImplementedError

    @property
    def is_static(self) -> bool:
        return False

    @property
    def is_fixed(self) -> bool:
        return False

    def permuted(self, perm: Sequence[int]) -> "ActionProfile":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def digest_parts(self) -> Iterator[bytes]:
        raise NotImplementedError


class StaticProfile(ActionProfile):
    """Each agent keeps one action set for the whole horizon."""

    def __init__(self, sets: Sequence[ActionSet | np.ndarray]):
        if len(sets) == 0:
            raise InvalidInputError("profile needs at least one agent")
        self.sets = tuple(s if isinstance(s, ActionSet) else ActionSet(s) for s in sets)
        dims = {s.dim for s in self.sets}
        if len(dims) != 1:
            raise InvalidInputError(f"action sets disagree on dimension: {sorted(dims)}")
        self.num_agents = len(self.sets)
        self.dim = dims.pop()
        self.horizon = None

    def action_set(self, agent: int, t: int) -> ActionSet:
        return self.sets[agent]

    @property
    def is_static(self) -> bool:
        return True

    @property
    def is_fixed(self) -> bool:
        first = self.sets[0]
        return all(s == first for s in self.sets[1:])

    def permuted(self, perm: Sequence[int]) -> "StaticProfile":
        new = [None] * self.num_agents
        for old, target in enumerate(perm):
            new[target] = self.sets[old]
        return StaticProfile(new)

    def to_dict(self) -> dict:
        return {"kind": "static", "sets": [s.actions.tolist() for s in self.sets]}

    def digest_parts(self) -> Iterator[bytes]:
        yield b"static"
        for s in self.sets:
            yield np.asarray(s.actions.shape).tobytes()
            yield s.actions.tobytes()


class ExplicitProfile(ActionProfile):
    """Fully explicit time-varying profile: ``sets[agent][t - 1]``."""

    def __init__(self, sets: Sequence[Sequence[ActionSet | np.ndarray]]):
        self.sets = tuple(
            tuple(s if isinstance(s, ActionSet) else ActionSet(s) for s in per_agent)
            for per_agent in sets
        )
        lengths = {len(per_agent) for per_agent in self.sets}
        if len(lengths) != 1:
            raise InvalidInputError("every agent needs an action set for every time-step")
        dims = {s.dim for per_agent in self.sets for s in per_agent}
        if len(dims) != 1:
            raise InvalidInputError(f"action sets disagree on dimension: {sorted(dims)}")
        self.num_agents = len(self.sets)
        self.horizon = lengths.pop()
        self.dim = dims.pop()

    def action_set(self, agent: int, t: int) -> ActionSet:
        if not 1 <= t <= self.horizon:
            raise InvalidInputError(f"time-step {t} outside [1, {self.horizon}]")
        return self.sets[agent][t - 1]

    def permuted(self, perm: Sequence[int]) -> "ExplicitProfile":
        new = [None] * self.num_agents
        for old, target in enumerate(perm):
            new[target] = self.sets[old]
        return ExplicitProfile(new)

    def to_dict(self) -> dict:
        return {
            "kind": "explicit",
            "sets": [[s.actions.tolist() for s in per_agent] for per_agent in self.sets],
        }

    def digest_parts(self) -> Iterator[bytes]:
        yield b"explicit"
        for per_agent in self.sets:
            for s in per_agent:
                yield np.asarray(s.actions.shape).tobytes()
                yield s.actions.tobytes()


class ContextualProfile(ActionProfile):
    """Actions are a shared item matrix modulated by a per-step context.

    ``X_{a,t} = items * contexts[a][t - 1]`` (row-wise elementwise product).
    Storing the contexts instead of the expanded sets keeps large instances
    (thousands of items over thousands of steps) in memory.
    """

    def __init__(self, items: np.ndarray, contexts: Sequence[np.ndarray]):
        self.items = _frozen(np.atleast_2d(items))
        self.contexts = tuple(_frozen(np.atleast_2d(c)) for c in contexts)
        self.dim = self.items.shape[1]
        if any(c.shape[1] != self.dim for c in self.contexts):
            raise InvalidInputError("context width must equal the item embedding width")
        lengths = {c.shape[0] for c in self.contexts}
        if len(lengths) != 1:
            raise InvalidInputError("every agent needs a context for every time-step")
        self.num_agents = len(self.contexts)
        self.horizon = lengths.pop()

    def action_set(self, agent: int, t: int) -> ActionSet:
        if not 1 <= t <= self.horizon:
            raise InvalidInputError(f"time-step {t} outside [1, {self.horizon}]")
        return ActionSet(self.items * self.contexts[agent][t - 1])

    def permuted(self, perm: Sequence[int]) -> "ContextualProfile":
        new = [None] * self.num_agents
        for old, target in enumerate(perm):
            new[target] = self.contexts[old]
        return ContextualProfile(self.items, new)

    def to_dict(self) -> dict:
        return {
            "kind": "contextual",
            "items": self.items.tolist(),
            "contexts": [c.tolist() for c in self.contexts],
        }

    def digest_parts(self) -> Iterator[bytes]:
        yield b"contextual"
        yield np.asarray(self.items.shape).tobytes()
        yield self.items.tobytes()
        for c in self.contexts:
            yield c.tobytes()


def profile_from_dict(data: dict) -> ActionProfile:
    kind = data.get("kind")
    if kind == "static":
        return StaticProfile([np.asarray(s, dtype=float) for s in data["sets"]])
    if kind == "explicit":
        return ExplicitProfile(
            [[np.asarray(s, dtype=float) for s in per_agent] for per_agent in data["sets"]]
        )
    if kind == "contextual":
        return ContextualProfile(
            np.asarray(data["items"], dtype=float),
            [np.asarray(c, dtype=float) for c in data["contexts"]],
        )
    raise InvalidInputError(f"unknown action profile kind {kind!r}")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A multi-agent linear bandit instance (immutable, shareable)."""

    theta_star: np.ndarray
    profile: ActionProfile
    horizon: int
    noise_std: float = 1.0
    name: str = ""
    generator: dict | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        theta = _frozen(np.ravel(self.theta_star))
        object.__setattr__(self, "theta_star", theta)
        if self.horizon < 1:
            raise InvalidInputError("horizon must be positive")
        if self.noise_std < 0:
            raise InvalidInputError("noise_std must be non-negative")
        if self.profile.dim != theta.size:
            raise InvalidInputError(
                f"actions have length {self.profile.dim} but theta_star has {theta.size}"
            )
        if self.profile.horizon is not None and self.profile.horizon < self.horizon:
            raise InvalidInputError("action profile does not cover the horizon")
        object.__setattr__(self, "_gap_cache", {})

    @property
    def dim(self) -> int:
        return self.theta_star.size

    @property
    def num_agents(self) -> int:
        return self.profile.num_agents

    @property
    def fixed_actions(self) -> bool:
        return self.profile.is_fixed

    def _check_time(self, t: int) -> None:
        if t < 1 or (t > self.horizon and not self.profile.is_static):
            raise InvalidInputError(f"time-step {t} outside [1, {self.horizon}]")

    def action_set(self, agent: int, t: int) -> ActionSet:
        if not 0 <= agent < self.num_agents:
            raise InvalidInputError(f"agent {agent} outside [0, {self.num_agents})")
        self._check_time(t)
        return self.profile.action_set(agent, t)

    def mean_rewards(self, agent: int, t: int) -> np.ndarray:
        """Expected reward of every action in ``X_{agent,t}``."""
        if self.profile.is_static:
            key = ("mean", agent)
            cache = self._gap_cache
            if key not in cache:
                cache[key] = _frozen(self.action_set(agent, 1).actions @ self.theta_star)
            return cache[key]
        return self.action_set(agent, t).actions @ self.theta_star

    def gaps(self, agent: int, t: int) -> np.ndarray:
        """Per-action gap ``max_x <theta, x> - <theta, x_i>`` (all >= 0)."""
        if self.profile.is_static:
            cache = self._gap_cache
            key = ("gap", agent)
            if key not in cache:
                means = self.mean_rewards(agent, 1)
                cache[key] = _frozen(means.max() - means)
            return cache[key]
        means = self.mean_rewards(agent, t)
        return means.max() - means

    def optimal_index(self, agent: int, t: int) -> int:
        """Index of the best action; ties go to the lowest index."""
        return int(np.argmax(self.mean_rewards(agent, t)))

    def permute_agents(self, perm: Sequence[int]) -> "ProblemInstance":
        """Relabel agents: agent ``a`` becomes agent ``perm[a]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.num_agents)):
            raise InvalidInputError("perm must be a bijection on the agents")
        return ProblemInstance(
            self.theta_star, self.profile.permuted(perm), self.horizon,
            self.noise_std, name=f"{self.name}|perm{perm}" if self.name else "",
        )

    def with_horizon(self, horizon: int) -> "ProblemInstance":
        return ProblemInstance(
            self.theta_star, self.profile, horizon, self.noise_std, self.name, self.generator
        )

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.theta_star.tobytes())
        h.update(np.asarray([self.horizon], dtype=np.int64).tobytes())
        h.update(np.asarray([self.noise_std], dtype=float).tobytes())
        for part in self.profile.digest_parts():
            h.update(part)
        return h.hexdigest()


def _check_dim(instance: ProblemInstance, action: np.ndarray) -> np.ndarray:
    action = np.asarray(action, dtype=float)
    if action.shape != (instance.dim,):
        raise InvalidInputError(
            f"action has shape {action.shape}, expected ({instance.dim},)"
        )
    return action


def expected_reward(instance: ProblemInstance, action: np.ndarray) -> float:
    """Noiseless reward ``<theta_star, action>``."""
    return float(instance.theta_star @ _check_dim(instance, action))


def sample_reward(instance: ProblemInstance, action: np.ndarray, rng) -> float:
    """Expected reward plus one ``N(0, noise_std^2)`` draw from ``rng``.

    ``rng`` is a ``numpy`` Generator, or an ``RngStream`` whose first draw is
    used.  Exactly one standard-normal variate is consumed, also when the
    noise is switched off, so streams stay aligned across noise levels.
    """
    mean = expected_reward(instance, action)
    if hasattr(rng, "generator"):
        rng = rng.generator()
    return mean + instance.noise_std * float(rng.standard_normal())


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One agent's play: action indices, action vectors and rewards for t=1..T."""

    agent: int
    action_indices: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    gaps: np.ndarray | None = None  # instantaneous gaps, filled by the runners

    def __post_init__(self) -> None:
        object.__setattr__(self, "action_indices", np.asarray(self.action_indices, dtype=np.int64))
        object.__setattr__(self, "actions", np.atleast_2d(np.asarray(self.actions, dtype=float)))
        object.__setattr__(self, "rewards", np.asarray(self.rewards, dtype=float))
        n = self.action_indices.size
        if self.actions.shape[0] != n or self.rewards.size != n:
            raise InvalidInputError("trajectory columns have different lengths")

    def __len__(self) -> int:
        return self.action_indices.size

    def entries(self) -> Iterator[tuple[int, np.ndarray, float]]:
        for i in range(len(self)):
            yield i + 1, self.actions[i], float(self.rewards[i])

    @property
    def regret_curve(self) -> np.ndarray:
        if self.gaps is None:
            raise InvalidInputError("trajectory carries no gaps; use pseudo_regret_curve")
        return np.cumsum(self.gaps)

    def identical_to(self, other: "Trajectory") -> bool:
        return (
            self.agent == other.agent
            and np.array_equal(self.action_indices, other.action_indices)
            and np.array_equal(self.actions, other.actions)
            and np.array_equal(self.rewards, other.rewards)
        )


def pseudo_regret_curve(instance: ProblemInstance, trajectory: Trajectory) -> np.ndarray:
    """Cumulative pseudo-regret ``sum_{s<=t} <theta, x*_s - x_s>`` for t = 1..T."""
    gaps = np.empty(len(trajectory))
    for i, (t, action, _) in enumerate(trajectory.entries()):
        aset = instance.action_set(trajectory.agent, t)
        idx = int(trajectory.action_indices[i])
        if not (0 <= idx < aset.size and np.array_equal(aset[idx], action)):
            found = aset.index_of(action)
            if found is None:
                raise ProtocolViolationError(
                    f"agent {trajectory.agent} played an action outside X_{{a,{t}}}"
                )
            idx = found
        gaps[i] = instance.gaps(trajectory.agent, t)[idx]
    return np.cumsum(gaps)


# ---------------------------------------------------------------------------
# serialization
#
# An instance file is UTF-8 JSON:
#   {"format": "coalbandit-instance/1", "d": int, "M": int, "T": int,
#    "sigma": float, "theta_star": [float, ...], "name": str,
#    "profile": {"kind": "static"|"explicit"|"contextual", ...}}
# or, instead of "profile", a generator block
#   "generator": {"name": "cyclic"|"asymmetric"|..., "params": {...}}
# Floats are written with repr precision, so a round trip is exact.


def instance_to_dict(instance: ProblemInstance, explicit: bool = True) -> dict:
    data = {
        "format": INSTANCE_FORMAT,
        "name": instance.name,
        "d": instance.dim,
        "M": instance.num_agents,
        "T": instance.horizon,
        "sigma": instance.noise_std,
        "theta_star": instance.theta_star.tolist(),
    }
    if explicit or instance.generator is None:
        data["profile"] = instance.profile.to_dict()
    else:
        data["generator"] = instance.generator
    return data


def instance_from_dict(data: dict) -> ProblemInstance:
    if data.get("format") != INSTANCE_FORMAT:
        raise InvalidInputError(f"unsupported instance format {data.get('format')!r}")
    if "generator" in data and "profile" not in data:
        from .instances import build_from_generator

        built = build_from_generator(data["generator"])
        return ProblemInstance(
            built.theta_star, built.profile, int(data["T"]), float(data["sigma"]),
            name=data.get("name", built.name), generator=data["generator"],
        )
    instance = ProblemInstance(
        np.asarray(data["theta_star"], dtype=float),
        profile_from_dict(data["profile"]),
        int(data["T"]),
        float(data["sigma"]),
        name=data.get("name", ""),
    )
    if instance.dim != int(data["d"]) or instance.num_agents != int(data["M"]):
        raise InvalidInputError("header d/M disagree with the stored profile")
    return instance


def save_instance(instance: ProblemInstance, path: str | Path, explicit: bool = True) -> None:
    Path(path).write_text(
        json.dumps(instance_to_dict(instance, explicit=explicit)), encoding="utf-8"
    )


def load_instance(path: str | Path) -> ProblemInstance:
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
