"""Anonymized data pools, pooled least squares and determinant-max exploration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..bandit_env import ActionSet
from ..errors import InvalidInputError, SingularDesignError

Sample = tuple[tuple[float, ...], float]


def _canonical(samples) -> tuple[Sample, ...]:
    return tuple(sorted((tuple(float(v) for v in x), float(y)) for x, y in samples))


@dataclass(frozen=True)
class PooledDataset:
    """What one agent may condition on at step ``t``.

    ``own[s]`` is the agent's own ``(x, y)`` at step ``s + 1``.  ``others[s]``
    is the multiset of partners' samples at that step, stored sorted so
    that nothing about who produced which sample survives.
    """

    own: tuple[Sample, ...]
    others: tuple[tuple[Sample, ...], ...]

    def __post_init__(self) -> None:
        if len(self.own) != len(self.others):
            raise InvalidInputError("own and others must cover the same time-steps")

    @classmethod
    def build(cls, own: Sequence, others: Sequence[Sequence]) -> "PooledDataset":
        own = tuple((tuple(float(v) for v in x), float(y)) for x, y in own)
        return cls(own, tuple(_canonical(step) for step in others))

    @classmethod
    def from_histories(
        cls, agent: int, histories: Mapping[int, Sequence[tuple[np.ndarray, float]]], upto: int
    ) -> "PooledDataset":
        """Pool for ``agent`` from per-agent histories, steps ``1..upto``."""
        own = histories[agent][:upto]
        others = [
            [histories[b][s] for b in histories if b != agent] for s in range(upto)
        ]
        return cls.build(own, others)

    @property
    def num_steps(self) -> int:
        return len(self.own)

    def all_samples(self):
        for x, y in self.own:
            yield x, y
        for step in self.others:
            yield from step

    def __len__(self) -> int:
        return len(self.own) + sum(len(step) for step in self.others)


@dataclass(frozen=True, eq=False)
class OlsEstimate:
    theta_hat: np.ndarray
    gram: np.ndarray
    moment: np.ndarray
    ridge: float


def design_statistics(samples, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """``sum x x^T`` and ``sum x y`` over an iterable of ``(x, y)``."""
    xs = []
    ys = []
    for x, y in samples:
        xs.append(x)
        ys.append(y)
    if not xs:
        return np.zeros((dim, dim)), np.zeros(dim)
    X = np.asarray(xs, dtype=float)
    Y = np.asarray(ys, dtype=float)
    return X.T @ X, X.T @ Y


def solve_ridge(
    gram: np.ndarray, moment: np.ndarray, ridge: float, prior: np.ndarray | None = None
) -> OlsEstimate:
    """``(gram + ridge I)^{-1} (moment + ridge prior)``.

    ``prior`` shifts the ridge penalty's centre away from zero; with
    ``prior = theta_star`` and noiseless data the estimate is exact.
    """
    if ridge < 0:
        raise InvalidInputError("ridge must be non-negative")
    d = moment.size
    V = gram + ridge * np.eye(d)
    rhs = moment if prior is None else moment + ridge * np.asarray(prior, dtype=float)
    if ridge == 0 and np.linalg.matrix_rank(V) < d:
        raise SingularDesignError("design is rank deficient and no ridge was given")
    theta = np.linalg.solve(V, rhs)
    return OlsEstimate(theta, V, rhs, float(ridge))


def pooled_ols(
    samples: PooledDataset, ridge: float, dim: int | None = None, prior: np.ndarray | None = None
) -> OlsEstimate:
    """Ridge OLS over own and pooled partner samples alike."""
    if len(samples) == 0 and ridge <= 0:
        raise SingularDesignError("no samples and no ridge")
    if dim is None:
        first = next(iter(samples.all_samples()), None)
        if first is None:
            raise InvalidInputError("dim is required for an empty pool")
        dim = len(first[0])
    gram, moment = design_statistics(samples.all_samples(), dim)
    return solve_ridge(gram, moment, ridge, prior)


def _as_matrix(action_set) -> np.ndarray:
    actions = action_set.actions if isinstance(action_set, ActionSet) else np.asarray(action_set, dtype=float)
    if actions.ndim != 2 or actions.shape[0] == 0:
        raise InvalidInputError("action set is empty")
    return actions


def detmax_index(action_set, gram: np.ndarray) -> int:
    """Index maximizing ``det(I + gram + x x^T)``; ties go to the lowest index.

    By the matrix determinant lemma this is the argmax of ``x^T A^{-1} x``
    with ``A = I + gram``.
    """
    actions = _as_matrix(action_set)
    A = np.eye(actions.shape[1]) + np.asarray(gram, dtype=float)
    quad = np.einsum("ij,ij->i", actions, np.linalg.solve(A, actions.T).T)
    return int(np.argmax(quad))


def detmax_action(action_set, gram: np.ndarray) -> np.ndarray:
    return _as_matrix(action_set)[detmax_index(action_set, gram)]


def detmax_values(action_set, gram: np.ndarray) -> np.ndarray:
    """Exact ``det(I + gram + x x^T)`` for every action (diagnostics, tests)."""
    actions = _as_matrix(action_set)
    base = np.eye(actions.shape[1]) + np.asarray(gram, dtype=float)
    return np.array([np.linalg.det(base + np.outer(x, x)) for x in actions])
