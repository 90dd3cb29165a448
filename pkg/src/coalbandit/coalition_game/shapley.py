"""Exact and permutation-sampled Shapley values."""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from ..errors import ExactLimitError, InvalidInputError
from ..rng import RngStream
from .game import Allocation, TUGame, popcounts

EXACT_LIMIT = 20


def shapley_weights(num_agents: int) -> np.ndarray:
    """``w[s] = s! (n - s - 1)! / n!`` for coalition sizes ``s = 0..n-1``."""
    n = num_agents
    return np.array([factorial(s) * factorial(n - s - 1) / factorial(n) for s in range(n)])


def _shapley_matrix_apply(num_agents: int, values: np.ndarray) -> np.ndarray:
    """Shapley values for value arrays whose last axis runs over coalitions."""
    n = num_agents
    w = shapley_weights(n)
    sizes = popcounts(n)
    masks = np.arange(2**n)
    out = np.empty(values.shape[:-1] + (n,))
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        marginal = values[..., without | bit] - values[..., without]
        out[..., i] = marginal @ w[sizes[without]]
    return out


def shapley_exact(game: TUGame, limit: int = EXACT_LIMIT) -> Allocation:
    """Exact Shapley value by summing weighted marginals over all coalitions.

    When the game carries per-repetition values the Shapley value of every
    repetition is computed as well; ``stderr`` is then their spread.
    """
    if game.num_agents > limit:
        raise ExactLimitError(
            f"{game.num_agents} players exceed the exact limit {limit}; use shapley_mc"
        )
    phi = _shapley_matrix_apply(game.num_agents, game.values)
    samples = None
    if game.samples is not None:
        samples = _shapley_matrix_apply(game.num_agents, game.samples)
    return Allocation(phi, "shapley-exact", samples=samples)


def shapley_mc(
    game: TUGame,
    num_perms: int,
    rng: RngStream | np.random.Generator | None = None,
    *,
    exhaustive: bool = False,
) -> Allocation:
    """Permutation-sampling estimate of the Shapley value.

    Each sampled join order contributes one marginal per agent; the estimate
    is their mean and ``stderr`` their sample standard deviation over
    ``sqrt(num_perms)``.  ``exhaustive=True`` walks every ordering exactly
    once instead of sampling (``num_perms`` is then ignored).
    """
    n = game.num_agents
    if exhaustive:
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    else:
        if num_perms < 1:
            raise InvalidInputError("num_perms must be positive")
        if rng is None:
            rng = RngStream(0, purpose="shapley")
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        base = np.broadcast_to(np.arange(n), (num_perms, n))
        perms = gen.permuted(base, axis=1)
    bits = np.left_shift(1, perms)
    prefix = np.cumsum(bits, axis=1)
    before = prefix - bits
    marginals_by_position = game.values[prefix] - game.values[before]
    marginals = np.empty_like(marginals_by_position)
    rows = np.arange(perms.shape[0])[:, None]
    marginals[rows, perms] = marginals_by_position
    P = marginals.shape[0]
    estimate = marginals.mean(axis=0)
    if P > 1:
        stderr = marginals.std(axis=0, ddof=1) / np.sqrt(P)
    else:
        stderr = np.zeros(n)
    return Allocation(estimate, "shapley-mc", stderr=stderr, extra={"num_perms": P})
