"""Core membership, core non-emptiness, convexity and Shapley-axiom checks.

Every check accepts an absolute tolerance ``tol``.  Checks on games estimated
from simulation also accept a multiplier ``k``: when both the game and the
allocation carry per-repetition samples, each inequality is relaxed by ``k``
standard errors of its own per-repetition left-minus-right difference.
A relative ``1e-12`` floating-point allowance is always added.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import ExactLimitError, InvalidInputError
from .game import Allocation, TUGame, ViolationReport, _membership, _stderr, format_coalition, popcounts
from .shapley import EXACT_LIMIT
from .simplex import simplex_max

REL_SLOP = 1e-12


def _slop(game: TUGame) -> float:
    return REL_SLOP * game.scale()


def _check_alloc(game: TUGame, alloc: Allocation) -> None:
    if len(alloc) != game.num_agents:
        raise InvalidInputError(
            f"allocation has {len(alloc)} entries for a {game.num_agents}-player game"
        )


def _stat_samples(game: TUGame, alloc: Allocation | None, k: float):
    """Per-repetition (game, allocation) samples when a statistical check is asked for."""
    if k <= 0:
        return None, None
    if game.samples is None:
        raise InvalidInputError("statistical tolerance needs a game with per-repetition values")
    if alloc is not None:
        if alloc.samples is None:
            raise InvalidInputError("statistical tolerance needs per-repetition payouts")
        if alloc.samples.shape[0] != game.samples.shape[0]:
            raise InvalidInputError("game and allocation have different repetition counts")
        return game.samples, alloc.samples
    return game.samples, None


def is_in_core(game: TUGame, alloc: Allocation, tol: float = 1e-9, k: float = 0.0) -> ViolationReport:
    """Efficiency plus ``sum_{a in S} p_a >= v(S)`` for every coalition ``S``."""
    _check_alloc(game, alloc)
    g_samples, p_samples = _stat_samples(game, alloc, k)
    member = _membership(game.num_agents).astype(float)
    slop = _slop(game)
    report = ViolationReport("core")

    sums = member @ alloc.payouts
    slack = sums - game.values
    allowance = tol + slop + np.zeros_like(slack)
    if g_samples is not None:
        allowance += k * _stderr(p_samples @ member.T - g_samples, axis=0)

    grand = game.grand_mask
    total = float(np.sum(alloc.payouts))
    diff = total - game.grand_value
    report.checked += 1
    if abs(diff) > allowance[grand]:
        report.add("efficiency", total, game.grand_value, -abs(diff))

    for mask in range(1, 2**game.num_agents):
        report.checked += 1
        if slack[mask] < -allowance[mask]:
            report.add(f"coalition {format_coalition(mask)}", sums[mask], game.values[mask], slack[mask])
    return report


def balancing_weights(game: TUGame) -> tuple[np.ndarray, float]:
    """Balancing weights maximizing ``sum_S w(S) v(S)``.

    Returns ``(w, value)``; the game is balanced (core non-empty) iff
    ``value <= v(N)``.  Singleton weights absorb whatever each agent's
    larger coalitions leave of its unit budget.
    """
    n = game.num_agents
    sizes = popcounts(n)
    masks = np.flatnonzero(sizes >= 2)
    singles = np.array([game.values[1 << a] for a in range(n)])
    member = _membership(n)
    weights = np.zeros(2**n)
    if masks.size == 0:
        for a in range(n):
            weights[1 << a] = 1.0
        return weights, float(singles.sum())
    excess = game.values[masks] - member[masks].astype(float) @ singles
    lp = simplex_max(excess, member[masks].T.astype(float), np.ones(n))
    weights[masks] = lp.x
    used = member[masks].T.astype(float) @ lp.x
    for a in range(n):
        weights[1 << a] = max(0.0, 1.0 - used[a])
    return weights, float(lp.objective + singles.sum())


def core_nonempty(game: TUGame, tol: float = 1e-9, limit: int = EXACT_LIMIT) -> tuple[bool, Allocation | None]:
    """Decide core non-emptiness by linear programming and return a witness.

    The LP solved is the balancedness problem; its optimal multipliers are
    a cheapest payout vector ``p`` meeting every coalition constraint.  The
    core is non-empty iff that cheapest total does not exceed ``v(N)``; the
    leftover is then shared equally to make the witness efficient.
    """
    n = game.num_agents
    if n > limit:
        raise ExactLimitError(f"{n} players exceed the exact limit {limit}")
    slop = _slop(game)
    singles = np.array([game.values[1 << a] for a in range(n)])
    sizes = popcounts(n)
    masks = np.flatnonzero(sizes >= 2)
    if masks.size == 0:
        return True, Allocation(singles.copy(), "custom", extra={"lp_objective": float(singles.sum())})

    member = _membership(n)
    excess = game.values[masks] - member[masks].astype(float) @ singles
    lp = simplex_max(excess, member[masks].T.astype(float), np.ones(n))
    cheapest = float(lp.objective + singles.sum())
    if cheapest > game.grand_value + tol + slop:
        return False, None

    payout = singles + np.maximum(lp.duals, 0.0)
    payout += (game.grand_value - float(np.sum(payout))) / n
    payout[-1] = game.grand_value - float(np.sum(payout[:-1]))
    return True, Allocation(payout, "custom", extra={"lp_objective": cheapest})


@lru_cache(maxsize=16)
def _subset_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``(S, Q)`` with ``S`` a strict subset of ``Q`` over ``n`` bits."""
    S = np.zeros(1, dtype=np.int64)
    Q = np.zeros(1, dtype=np.int64)
    for b in range(n):
        bit = 1 << b
        S = np.concatenate([S, S, S | bit])
        Q = np.concatenate([Q, Q | bit, Q | bit])
    keep = S != Q
    return S[keep], Q[keep]


def _expand(compact: np.ndarray, a: int) -> np.ndarray:
    """Insert a zero bit at position ``a`` into masks over the other players."""
    low = compact & ((1 << a) - 1)
    high = compact >> a
    return low | (high << (a + 1))


def is_convex(
    game: TUGame, tol: float = 0.0, k: float = 0.0, max_witnesses: int | None = None
) -> ViolationReport:
    """Check ``v(Q+a) - v(Q) >= v(S+a) - v(S)`` for all ``S ⊂ Q ⊆ N - a``.

    Enumerates ``M (3^(M-1) - 2^(M-1))`` non-trivial triples.
    """
    n = game.num_agents
    g_samples, _ = _stat_samples(game, None, k)
    slop = _slop(game)
    report = ViolationReport("convexity")
    if n < 2:
        return report
    S_c, Q_c = _subset_pairs(n - 1)
    v = game.values
    for a in range(n):
        bit = 1 << a
        S = _expand(S_c, a)
        Q = _expand(Q_c, a)
        small = v[S | bit] - v[S]
        large = v[Q | bit] - v[Q]
        slack = large - small
        allowance = tol + slop
        if g_samples is not None:
            vs = g_samples
            diff = (vs[:, Q | bit] - vs[:, Q]) - (vs[:, S | bit] - vs[:, S])
            allowance = allowance + k * _stderr(diff, axis=0)
        report.checked += S.size
        bad = np.flatnonzero(slack < -allowance)
        for i in bad:
            if max_witnesses is not None and len(report.violations) >= max_witnesses:
                report.details["truncated"] = True
                break
            report.add(
                f"a={a}, S={format_coalition(int(S[i]))}, Q={format_coalition(int(Q[i]))}",
                large[i], small[i], slack[i],
            )
    return report


def axiom_report(game: TUGame, alloc: Allocation, tol: float = 1e-9, k: float = 0.0) -> dict[str, ViolationReport]:
    """Efficiency, dummy-player and equal-treatment checks of ``alloc`` on ``game``.

    Dummies and equal pairs are first detected within the same tolerance
    and then required to be paid ``v({a})`` and equally, respectively.
    """
    _check_alloc(game, alloc)
    g_samples, p_samples = _stat_samples(game, alloc, k)
    n = game.num_agents
    slop = _slop(game)
    v = game.values
    p = alloc.payouts
    masks = np.arange(2**n)

    def allowance(diff_samples):
        base = tol + slop
        if g_samples is None:
            return base
        return base + k * _stderr(diff_samples, axis=0)

    eff = ViolationReport("efficiency", checked=1)
    diff = float(np.sum(p)) - game.grand_value
    eff_samples = None if g_samples is None else p_samples.sum(axis=1) - g_samples[:, game.grand_mask]
    if abs(diff) > allowance(eff_samples):
        eff.add("efficiency", float(np.sum(p)), game.grand_value, -abs(diff))

    dummy = ViolationReport("dummy")
    dummies = []
    for a in range(n):
        bit = 1 << a
        S = masks[(masks & bit) == 0]
        gap = v[S | bit] - v[S] - v[bit]
        gap_samples = None
        if g_samples is not None:
            gap_samples = g_samples[:, S | bit] - g_samples[:, S] - g_samples[:, [bit]]
        if np.all(np.abs(gap) <= allowance(gap_samples)):
            dummies.append(a)
            dummy.checked += 1
            d_samples = None if g_samples is None else p_samples[:, a] - g_samples[:, bit]
            if abs(p[a] - v[bit]) > allowance(d_samples):
                dummy.add(f"dummy agent {a}", p[a], v[bit], -abs(p[a] - v[bit]))
    dummy.details["dummies"] = dummies

    sym = ViolationReport("symmetry")
    equals = []
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            S = masks[(masks & (bi | bj)) == 0]
            gap = v[S | bi] - v[S | bj]
            gap_samples = None if g_samples is None else g_samples[:, S | bi] - g_samples[:, S | bj]
            if np.all(np.abs(gap) <= allowance(gap_samples)):
                equals.append((i, j))
                sym.checked += 1
                d_samples = None if g_samples is None else p_samples[:, i] - p_samples[:, j]
                if abs(p[i] - p[j]) > allowance(d_samples):
                    sym.add(f"equal agents {i},{j}", p[i], p[j], -abs(p[i] - p[j]))
    sym.details["equal_pairs"] = equals

    return {"efficiency": eff, "dummy": dummy, "symmetry": sym}
