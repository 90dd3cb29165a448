"""Synthetic and MovieLens-derived problem instances."""

from __future__ import annotations

from ..bandit_env import ProblemInstance
from ..errors import InvalidConfigError
from .movielens import (
    ATTRIBUTES,
    GENDER_LABELS,
    OCCUPATION_GROUPS,
    MovieLensData,
    MovieLensSpec,
    build_movielens,
    embed_svd,
    fit_theta_star,
    load_embedding_file,
    load_movielens,
    save_embedding_file,
    svd_embeddings,
    zip_to_state,
)
from .synthetic import (
    SyntheticSpec,
    block_theta,
    make_asymmetric_synthetic,
    make_cyclic_synthetic,
    make_synthetic,
)


def build_from_generator(generator: dict) -> ProblemInstance:
    """Rebuild an instance from its ``{"name": ..., "params": {...}}`` recipe."""
    name = generator.get("name")
    params = dict(generator.get("params", {}))
    if name in ("cyclic-symmetric", "asymmetric-hub"):
        params.setdefault("family", name)
        return make_synthetic(SyntheticSpec(**params))
    if name == "movielens":
        return load_movielens(MovieLensSpec.from_dict(params))[0]
    raise InvalidConfigError(f"unknown instance generator {name!r}")


__all__ = [
    "ATTRIBUTES",
    "GENDER_LABELS",
    "OCCUPATION_GROUPS",
    "MovieLensData",
    "MovieLensSpec",
    "SyntheticSpec",
    "block_theta",
    "build_from_generator",
    "build_movielens",
    "embed_svd",
    "fit_theta_star",
    "load_embedding_file",
    "load_movielens",
    "make_asymmetric_synthetic",
    "make_cyclic_synthetic",
    "make_synthetic",
    "save_embedding_file",
    "svd_embeddings",
    "zip_to_state",
]
