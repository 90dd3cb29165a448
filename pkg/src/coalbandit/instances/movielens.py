"""MovieLens-100k instances with agents formed by a user attribute.

Users are split by gender, age bracket, occupation group or US state, and
each group becomes one agent.  Movies are embedded with a truncated SVD of
the user-by-movie rating matrix and ``theta_star`` is the least-squares fit
of ratings on the embedded features.

Two action models are offered:

* ``context="user"`` (default): at every step each agent is represented by
  one of its users, drawn from a seeded stream, and action ``j`` is the
  elementwise product of that user's embedding with movie ``j``'s.  Agents
  then differ in their reward landscapes.
* ``context="movie"``: every agent plays the plain movie embeddings, so all
  agents share one fixed action set.

Input formats are the ones shipped with the dataset: tab-separated ``u.data``
(user, item, rating, timestamp) and pipe-separated ``u.user`` (id, age,
gender, occupation, zip).
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from ..bandit_env import ContextualProfile, ProblemInstance, StaticProfile
from ..errors import IngestionError, InvalidConfigError, SingularDesignError
from ..rng import RngStream

ATTRIBUTES = ("gender", "age", "occupation", "geography")

GENDER_LABELS = ("Male", "Female")
GENDER_CODES = {"M": 0, "F": 1}

OCCUPATION_GROUPS = {
    "student": ("student",),
    "technical": ("engineer", "programmer", "technician"),
    "management": ("administrator", "executive"),
    "creative": ("artist", "entertainment", "writer"),
    "academic": ("educator", "librarian", "scientist"),
    "business": ("marketing", "salesman", "lawyer"),
    "healthcare": ("doctor", "healthcare"),
    "non-professional": ("homemaker", "none", "other", "retired"),
}

# lower edges of the age brackets; the last bracket is open-ended
DEFAULT_AGE_EDGES = (0, 18, 25, 35, 45, 50, 56)


@dataclass(frozen=True)
class MovieLensSpec:
    ratings_path: str
    users_path: str
    attribute: str = "gender"
    d: int = 100
    horizon: int = 4096
    reps: int = 5
    noise_std: float = 1.0
    max_users: int | None = None
    max_movies: int | None = None
    seed: int = 0
    context: str = "user"
    rescale: bool = False
    ridge: float = 0.0
    age_edges: tuple = DEFAULT_AGE_EDGES
    geo_groups: int = 8
    embedding_path: str | None = None
    user_embedding_path: str | None = None

    def __post_init__(self) -> None:
        if self.attribute not in ATTRIBUTES:
            raise InvalidConfigError(f"unknown attribute {self.attribute!r}; expected one of {ATTRIBUTES}")
        if self.d < 1 or self.horizon < 1 or self.reps < 1:
            raise InvalidConfigError("d, horizon and reps must be positive")
        if self.context not in ("user", "movie"):
            raise InvalidConfigError("context must be 'user' or 'movie'")
        if self.geo_groups < 2:
            raise InvalidConfigError("geo_groups must be at least 2")
        edges = tuple(int(e) for e in self.age_edges)
        if list(edges) != sorted(set(edges)):
            raise InvalidConfigError("age_edges must be strictly increasing")
        object.__setattr__(self, "age_edges", edges)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["age_edges"] = list(self.age_edges)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "MovieLensSpec":
        data = dict(data)
        if "age_edges" in data:
            data["age_edges"] = tuple(data["age_edges"])
        return cls(**data)


@dataclass(frozen=True)
class Ratings:
    user: np.ndarray  # raw ids
    item: np.ndarray
    rating: np.ndarray


@dataclass(frozen=True)
class User:
    user_id: int
    age: int
    gender: str
    occupation: str
    zip_code: str


@dataclass
class MovieLensData:
    instance: ProblemInstance
    labels: list[str]
    movie_ids: np.ndarray
    groups: list[np.ndarray] = field(default_factory=list)


# ---------------------------------------------------------------------------
# file parsing


def _open_lines(path: str | Path):
    p = Path(path)
    if not p.is_file():
        raise IngestionError(f"{p}: file not found")
    return p.read_text(encoding="latin-1").splitlines()


def read_ratings(path: str | Path) -> Ratings:
    users, items, ratings = [], [], []
    for lineno, line in enumerate(_open_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            raise IngestionError(f"{path}:{lineno}: expected user<TAB>item<TAB>rating, got {line!r}")
        try:
            u, i, r = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise IngestionError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
        if u < 1 or i < 1 or not 1 <= r <= 5:
            raise IngestionError(f"{path}:{lineno}: ids must be positive and ratings in [1, 5]")
        users.append(u)
        items.append(i)
        ratings.append(r)
    if not users:
        raise IngestionError(f"{path}: no ratings")
    return Ratings(np.array(users), np.array(items), np.array(ratings, dtype=float))


def read_users(path: str | Path) -> list[User]:
    out = []
    for lineno, line in enumerate(_open_lines(path), start=1):
        if not line.strip():
            continue
        parts = line.split("|")
        if len(parts) != 5:
            raise IngestionError(f"{path}:{lineno}: expected id|age|gender|occupation|zip, got {line!r}")
        try:
            uid, age = int(parts[0]), int(parts[1])
        except ValueError:
            raise IngestionError(f"{path}:{lineno}: non-numeric id or age in {line!r}") from None
        if parts[2] not in GENDER_CODES:
            raise IngestionError(f"{path}:{lineno}: gender must be M or F, got {parts[2]!r}")
        out.append(User(uid, age, parts[2], parts[3].strip(), parts[4].strip()))
    if not out:
        raise IngestionError(f"{path}: no users")
    return out


@lru_cache(maxsize=1)
def _zip_table() -> tuple[tuple[int, int, str], ...]:
    text = resources.files("coalbandit.instances").joinpath("data/zip3_state.csv").read_text()
    rows = csv.DictReader(text.splitlines())
    return tuple((int(r["prefix_lo"]), int(r["prefix_hi"]), r["state"]) for r in rows)


def zip_to_state(zip_code: str) -> str:
    """US state (or territory) from the 3-digit zip prefix; ``"Other"`` if unknown."""
    head = zip_code.strip()[:3]
    if len(head) < 3 or not head.isdigit():
        return "Other"
    prefix = int(head)
    for lo, hi, state in _zip_table():
        if lo <= prefix <= hi:
            return state
    return "Other"


def age_label(edges: Sequence[int], k: int) -> str:
    lo = edges[k]
    if k == len(edges) - 1:
        return f"{lo}+"
    if lo == 0:
        return f"<{edges[1]}"
    return f"{lo}-{edges[k + 1] - 1}"


def group_users(users: Sequence[User], spec: MovieLensSpec) -> tuple[list[str], dict[int, int]]:
    """Labels of the attribute classes and the class of every user id.

    Classes without users are dropped.
    """
    if spec.attribute == "gender":
        labels = list(GENDER_LABELS)
        cls = {u.user_id: GENDER_CODES[u.gender] for u in users}
    elif spec.attribute == "age":
        edges = spec.age_edges
        labels = [age_label(edges, k) for k in range(len(edges))]
        cls = {u.user_id: int(np.searchsorted(edges, u.age, side="right") - 1) for u in users}
        if any(c < 0 for c in cls.values()):
            raise IngestionError(f"a user is younger than the lowest age edge {edges[0]}")
    elif spec.attribute == "occupation":
        labels = list(OCCUPATION_GROUPS)
        lookup = {occ: k for k, members in enumerate(OCCUPATION_GROUPS.values()) for occ in members}
        cls = {}
        for u in users:
            if u.occupation not in lookup:
                raise IngestionError(f"user {u.user_id}: unknown occupation {u.occupation!r}")
            cls[u.user_id] = lookup[u.occupation]
    else:
        states = {u.user_id: zip_to_state(u.zip_code) for u in users}
        counts: dict[str, int] = {}
        for s in states.values():
            counts[s] = counts.get(s, 0) + 1
        ranked = sorted((s for s in counts if s != "Other"), key=lambda s: (-counts[s], s))
        keep = ranked[: spec.geo_groups - 1]
        labels = keep + ["Other"]
        index = {s: k for k, s in enumerate(keep)}
        cls = {uid: index.get(s, len(keep)) for uid, s in states.items()}
    present = sorted(set(cls.values()))
    remap = {old: new for new, old in enumerate(present)}
    return [labels[k] for k in present], {uid: remap[c] for uid, c in cls.items()}


# ---------------------------------------------------------------------------
# embeddings and regression


def _svd_parts(matrix: np.ndarray, d: int, missing_value: float | None):
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise InvalidConfigError("rating matrix must be two-dimensional")
    if not 1 <= d <= min(X.shape):
        raise InvalidConfigError(f"d={d} must lie in [1, {min(X.shape)}]")
    observed = ~np.isnan(X) if missing_value is None else X != missing_value
    X = np.where(observed, X, np.nan)
    global_mean = np.nanmean(X) if observed.any() else 0.0
    counts = observed.sum(axis=0)
    col_sum = np.where(observed, X, 0.0).sum(axis=0)
    col_mean = np.where(counts > 0, col_sum / np.maximum(counts, 1), global_mean)
    centered = np.where(observed, X, col_mean) - col_mean
    U, s, Vt = np.linalg.svd(centered, full_matrices=False)
    U, s, V = U[:, :d], s[:d], Vt[:d].T
    # sign convention: the largest-magnitude entry of every movie component is positive
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivot, np.arange(d)])
    signs[signs == 0] = 1.0
    return U * signs, s, V * signs, col_mean


def embed_svd(matrix: np.ndarray, d: int, missing_value: float | None = 0.0) -> np.ndarray:
    """Movie embeddings ``V_d * s_d`` from a rank-``d`` SVD of the rating matrix.

    Missing entries (``missing_value``, or NaN when it is None) are filled
    with their column mean and every column is then centered.
    """
    _, s, V, _ = _svd_parts(matrix, d, missing_value)
    return V * s


def svd_embeddings(matrix: np.ndarray, d: int, missing_value: float | None = 0.0):
    """``(user_embeddings, movie_embeddings, column_means)``.

    ``user_embeddings @ movie_embeddings.T + column_means`` is the rank-``d``
    reconstruction of the imputed matrix.
    """
    U, s, V, col_mean = _svd_parts(matrix, d, missing_value)
    return U, V * s, col_mean


def fit_theta_star(
    actions: np.ndarray,
    movie_index: np.ndarray,
    ratings: np.ndarray,
    contexts: np.ndarray | None = None,
    ridge: float = 0.0,
) -> np.ndarray:
    """Least-squares ``theta`` for ``rating ~ <theta, x>``.

    Row ``n`` has feature ``actions[movie_index[n]]``, multiplied elementwise
    by ``contexts[n]`` when contexts are given.  With ``ridge = 0`` a
    rank-deficient design raises :class:`SingularDesignError`.
    """
    X = np.asarray(actions, dtype=float)[np.asarray(movie_index)]
    if contexts is not None:
        X = X * np.asarray(contexts, dtype=float)
    y = np.asarray(ratings, dtype=float)
    d = X.shape[1]
    if ridge > 0:
        return np.linalg.solve(X.T @ X + ridge * np.eye(d), X.T @ y)
    theta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < d:
        raise SingularDesignError(f"regression design has rank {rank} < {d}; set a ridge")
    return theta


def load_embedding_file(path: str | Path) -> np.ndarray:
    """Read ``"<num_actions> <d>"`` followed by one whitespace/comma separated row per action."""
    lines = [ln for ln in _open_lines(path) if ln.strip()]
    if not lines:
        raise IngestionError(f"{path}: empty embedding file")
    try:
        n, d = (int(x) for x in lines[0].replace(",", " ").split())
    except ValueError:
        raise IngestionError(f"{path}:1: header must be '<num_actions> <d>'") from None
    if len(lines) - 1 != n:
        raise IngestionError(f"{path}: header promises {n} rows, found {len(lines) - 1}")
    out = np.empty((n, d))
    for k, line in enumerate(lines[1:], start=2):
        try:
            row = [float(x) for x in line.replace(",", " ").split()]
        except ValueError:
            raise IngestionError(f"{path}:{k}: non-numeric entry") from None
        if len(row) != d:
            raise IngestionError(f"{path}:{k}: expected {d} values, found {len(row)}")
        out[k - 2] = row
    return out


def save_embedding_file(matrix: np.ndarray, path: str | Path) -> None:
    matrix = np.atleast_2d(matrix)
    lines = [f"{matrix.shape[0]} {matrix.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in matrix]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# instance construction


def _top_movies(ratings: Ratings, max_movies: int | None) -> np.ndarray:
    ids, counts = np.unique(ratings.item, return_counts=True)
    if max_movies is None or max_movies >= ids.size:
        return ids
    order = np.lexsort((ids, -counts))  # most rated first, ties by id
    return np.sort(ids[order[:max_movies]])


def _top_users(users: Sequence[User], ratings: Ratings, max_users: int | None) -> np.ndarray:
    ids = np.array(sorted(u.user_id for u in users))
    if max_users is None or max_users >= ids.size:
        return ids
    counts = np.array([np.count_nonzero(ratings.user == u) for u in ids])
    order = np.lexsort((ids, -counts))
    return np.sort(ids[order[:max_users]])


def load_movielens(spec: MovieLensSpec) -> tuple[ProblemInstance, list[str]]:
    """The attribute-partitioned instance described by ``spec`` and its agent labels."""
    data = build_movielens(spec)
    return data.instance, data.labels


def build_movielens(spec: MovieLensSpec) -> MovieLensData:
    """Like :func:`load_movielens` but also returns movie ids and user groups.

    Deterministic: the same files, spec and seed give the same instance.
    """
    ratings = read_ratings(spec.ratings_path)
    users = read_users(spec.users_path)
    known = {u.user_id for u in users}
    unknown = set(np.unique(ratings.user).tolist()) - known
    if unknown:
        raise IngestionError(f"{spec.ratings_path}: ratings reference unknown users {sorted(unknown)[:5]}")

    movie_ids = _top_movies(ratings, spec.max_movies)
    user_ids = _top_users(users, ratings, spec.max_users)
    selected = set(user_ids.tolist())
    users = [u for u in users if u.user_id in selected]
    labels, cls = group_users(users, spec)

    movie_col = {m: j for j, m in enumerate(movie_ids.tolist())}
    user_row = {u: i for i, u in enumerate(user_ids.tolist())}
    keep = np.array([
        (u in user_row) and (m in movie_col) for u, m in zip(ratings.user.tolist(), ratings.item.tolist())
    ])
    rows = np.array([user_row[u] for u in ratings.user[keep].tolist()], dtype=int)
    cols = np.array([movie_col[m] for m in ratings.item[keep].tolist()], dtype=int)
    values = ratings.rating[keep]
    if values.size == 0:
        raise IngestionError("no ratings remain after subsampling")

    matrix = np.full((user_ids.size, movie_ids.size), np.nan)
    matrix[rows, cols] = values  # a repeated (user, movie) pair keeps its last rating

    if spec.embedding_path is not None:
        movie_emb = load_embedding_file(spec.embedding_path)
        if movie_emb.shape != (movie_ids.size, spec.d):
            raise InvalidConfigError(
                f"embedding file has shape {movie_emb.shape}, expected {(movie_ids.size, spec.d)}"
            )
        user_emb = None
        if spec.user_embedding_path is not None:
            user_emb = load_embedding_file(spec.user_embedding_path)
            if user_emb.shape != (user_ids.size, spec.d):
                raise InvalidConfigError("user embedding file does not match the selected users")
        elif spec.context == "user":
            raise InvalidConfigError("context='user' with an external movie embedding needs user_embedding_path")
    else:
        user_emb, movie_emb, _ = svd_embeddings(matrix, spec.d, missing_value=None)

    target = (values - 1.0) / 4.0 if spec.rescale else values
    contexts = user_emb[rows] if spec.context == "user" else None
    theta = fit_theta_star(movie_emb, cols, target, contexts, ridge=spec.ridge)

    groups = []
    for k in range(len(labels)):
        groups.append(np.array([user_row[u.user_id] for u in users if cls[u.user_id] == k], dtype=int))

    if spec.context == "user":
        per_agent = []
        for a, members in enumerate(groups):
            gen = RngStream(spec.seed, agent=a, purpose="context").generator()
            drawn = members[gen.integers(members.size, size=spec.horizon)]
            per_agent.append(user_emb[drawn])
        profile = ContextualProfile(movie_emb, per_agent)
    else:
        profile = StaticProfile([movie_emb] * len(labels))

    instance = ProblemInstance(
        theta, profile, spec.horizon, spec.noise_std,
        name=f"movielens-{spec.attribute}",
        generator={"name": "movielens", "params": spec.to_dict()},
    )
    return MovieLensData(instance, labels, movie_ids, groups)
