"""Shared test instances and a MovieLens-format fixture writer."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from coalbandit.bandit_env import ProblemInstance, StaticProfile
from coalbandit.instances.movielens import OCCUPATION_GROUPS

RAW_OCCUPATIONS = sorted(occ for group in OCCUPATION_GROUPS.values() for occ in group)


def mab_instance(means, num_agents: int = 1, horizon: int = 100, sigma: float = 1.0) -> ProblemInstance:
    """K-armed bandit as a linear bandit on basis vectors, shared by all agents."""
    means = np.asarray(means, dtype=float)
    basis = np.eye(means.size)
    return ProblemInstance(means, StaticProfile([basis] * num_agents), horizon, sigma)


def gap_instance(gaps, num_agents: int = 1, horizon: int = 100, sigma: float = 1.0, top: float = 1.0):
    return mab_instance(top - np.asarray(gaps, dtype=float), num_agents, horizon, sigma)


def heterogeneous_instance(horizon: int = 1024, sigma: float = 1.0) -> ProblemInstance:
    """Three agents on basis actions of R^5.

    Agents 0 and 1 mirror each other ({e1, e2} and {e1, e3} with equal
    rewards on e2 and e3) and agent 2 ({e4, e5}) shares no coordinate with
    them, so it is a dummy in expectation.
    """
    theta = np.array([0.5, 0.35, 0.35, 0.6, 0.4])
    e = np.eye(5)
    sets = [e[[0, 1]], e[[0, 2]], e[[3, 4]]]
    return ProblemInstance(theta, StaticProfile(sets), horizon, sigma, name="heterogeneous-3")


def write_movielens_fixture(
    root: str | Path,
    num_users: int = 150,
    num_movies: int = 260,
    ratings_per_user: int = 60,
    rank: int = 4,
    seed: int = 7,
) -> Path:
    """Write ``u.data`` and ``u.user`` with latent-factor ratings in the MovieLens layout."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    U = rng.normal(size=(num_users, rank))
    V = rng.normal(size=(num_movies, rank))
    bias = rng.normal(scale=0.7, size=num_movies)
    popularity = np.exp(-np.arange(num_movies) / (num_movies / 4))
    popularity /= popularity.sum()
    rows = []
    for u in range(num_users):
        movies = rng.choice(num_movies, size=ratings_per_user, replace=False, p=popularity)
        for m in sorted(movies):
            score = 3.2 + bias[m] + 0.5 * U[u] @ V[m] + rng.normal(scale=0.5)
            rating = int(np.clip(np.rint(score), 1, 5))
            rows.append(f"{u + 1}\t{m + 1}\t{rating}\t{880000000 + len(rows)}")
    (root / "u.data").write_text("\n".join(rows) + "\n", encoding="latin-1")

    zips = ["55414", "94043", "32067", "15213", "98101", "10003", "60402", "T8H1N", "02139", "78741"]
    users = []
    for u in range(num_users):
        age = int(rng.integers(12, 70))
        gender = "M" if rng.random() < 0.6 else "F"
        occ = RAW_OCCUPATIONS[u % len(RAW_OCCUPATIONS)]
        users.append(f"{u + 1}|{age}|{gender}|{occ}|{zips[u % len(zips)]}")
    (root / "u.user").write_text("\n".join(users) + "\n", encoding="latin-1")
    return root
