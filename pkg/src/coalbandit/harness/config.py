"""Experiment configuration.

A configuration is a JSON object.  Recognized keys (all optional except
``instance`` and ``seed``)::

    {
      "instance":  {"kind": "synthetic", "family": "cyclic-symmetric", "sigma": 1.0}
                 | {"kind": "movielens", "ratings_path": ..., "users_path": ...,
                    "attribute": "gender", "d": 20, "max_movies": 200, ...}
                 | {"kind": "file", "path": "instance.json"},
      "algorithm": "linucb-m",          # see coalbandit.algorithms.ALGORITHMS
      "params":    {},                  # algorithm hyperparameters
      "horizon":   512,                 # overrides the instance horizon
      "reps":      5,
      "seed":      0,
      "scope":     "all" | "grand" | [[0, 1], [2], ...],
      "output_dir": "out/",
      "k":         3.0,                 # stderr multiplier for statistical checks
      "workers":   1,
      "shapley":   "exact" | "mc",
      "mc_perms":  2000,
      "full_scale": false
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..algorithms import ALGORITHMS
from ..errors import InvalidConfigError

INSTANCE_KINDS = ("synthetic", "movielens", "file")

# runs above this many agent-steps need full_scale=True
FULL_SCALE_AGENT_STEPS = 10_000_000


@dataclass
class ExperimentConfig:
    instance: dict
    seed: int
    algorithm: str = "linucb-m"
    params: dict = field(default_factory=dict)
    horizon: int | None = 512
    reps: int = 5
    scope: str | list = "all"
    output_dir: str | None = None
    k: float = 3.0
    workers: int = 1
    shapley: str = "exact"
    mc_perms: int = 2000
    full_scale: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.instance, dict) or self.instance.get("kind") not in INSTANCE_KINDS:
            raise InvalidConfigError(f"instance.kind must be one of {INSTANCE_KINDS}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.horizon is not None and self.horizon < 1:
            raise InvalidConfigError("horizon must be at least 1")
        if self.reps < 1:
            raise InvalidConfigError("reps must be at least 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfigError("seed must be a non-negative integer")
        if isinstance(self.scope, str) and self.scope not in ("all", "grand"):
            raise InvalidConfigError("scope must be 'all', 'grand' or a list of coalitions")
        if self.k < 0 or self.workers < 1:
            raise InvalidConfigError("k must be non-negative and workers positive")
        if self.shapley not in ("exact", "mc") or self.mc_perms < 2:
            raise InvalidConfigError("shapley must be 'exact' or 'mc' with mc_perms >= 2")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in data or "instance" not in data:
            raise InvalidConfigError("config needs 'instance' and 'seed'")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def canonical_json(self) -> str:
        """Config without output location, with sorted keys; hashed for provenance."""
        data = self.to_dict()
        data.pop("output_dir")
        data.pop("workers")  # results do not depend on parallelism
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()
