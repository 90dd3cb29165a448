"""Regret tables, TU games and allocations.

Coalitions are bitmasks: agent ``a`` belongs to ``mask`` iff bit ``a`` is
set.  Arrays indexed by coalition have length ``2**M`` with the empty
coalition at index 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import IncompleteTableError, InvalidInputError


def members_of(mask: int, num_agents: int | None = None) -> tuple[int, ...]:
    out = []
    a = 0
    while mask >> a:
        if (mask >> a) & 1:
            out.append(a)
        a += 1
    return tuple(out)


def mask_of(members: Iterable[int]) -> int:
    mask = 0
    for a in members:
        mask |= 1 << int(a)
    return mask


def format_coalition(mask: int) -> str:
    return "{" + ",".join(str(a) for a in members_of(mask)) + "}"


def popcounts(num_agents: int) -> np.ndarray:
    masks = np.arange(2**num_agents)
    counts = np.zeros(2**num_agents, dtype=np.int64)
    for a in range(num_agents):
        counts += (masks >> a) & 1
    return counts


def _stderr(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    n = samples.shape[axis]
    if n < 2:
        return np.zeros(np.delete(samples.shape, axis))
    return samples.std(axis=axis, ddof=1) / np.sqrt(n)


@dataclass(eq=False)
class RegretTable:
    """Mean regret (and its standard error) of every agent in every coalition.

    ``means[mask, a]`` is meaningful only when bit ``a`` of ``mask`` is set
    and ``present[mask]`` is true; other cells hold NaN.  ``samples`` keeps
    the per-repetition regrets, shape ``(R, 2**M, M)``, when available.
    """

    num_agents: int
    means: np.ndarray
    stderr: np.ndarray
    num_reps: np.ndarray
    present: np.ndarray
    samples: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    @classmethod
    def empty(cls, num_agents: int) -> "RegretTable":
        n = 2**num_agents
        return cls(
            num_agents,
            np.full((n, num_agents), np.nan),
            np.full((n, num_agents), np.nan),
            np.zeros(n, dtype=np.int64),
            np.zeros(n, dtype=bool),
        )

    @classmethod
    def from_entries(
        cls,
        num_agents: int,
        entries: Mapping[tuple[int, int], tuple[float, float, int]],
        labels: Sequence[str] | None = None,
    ) -> "RegretTable":
        """From ``{(mask, agent): (mean, stderr, num_reps)}``."""
        table = cls.empty(num_agents)
        for (mask, agent), (mean, se, reps) in entries.items():
            if not (mask >> agent) & 1:
                raise InvalidInputError(f"agent {agent} is not a member of {format_coalition(mask)}")
            table.means[mask, agent] = mean
            table.stderr[mask, agent] = se
            table.num_reps[mask] = reps
            table.present[mask] = True
        for mask in np.flatnonzero(table.present):
            for a in members_of(int(mask)):
                if np.isnan(table.means[mask, a]):
                    raise InvalidInputError(
                        f"coalition {format_coalition(int(mask))} lacks agent {a}"
                    )
        table.labels = tuple(labels) if labels is not None else None
        return table

    @classmethod
    def from_samples(
        cls,
        num_agents: int,
        samples: np.ndarray,
        present: np.ndarray,
        labels: Sequence[str] | None = None,
    ) -> "RegretTable":
        """From per-repetition regrets of shape ``(R, 2**M, M)``."""
        samples = np.asarray(samples, dtype=float)
        R = samples.shape[0]
        means = samples.mean(axis=0)
        se = _stderr(samples, axis=0)
        member = _membership(num_agents)
        keep = member & present[:, None]
        means = np.where(keep, means, np.nan)
        se = np.where(keep, se, np.nan)
        reps = np.where(present, R, 0).astype(np.int64)
        return cls(num_agents, means, se, reps, np.asarray(present, dtype=bool), samples,
                   tuple(labels) if labels is not None else None)

    @property
    def num_coalitions(self) -> int:
        return 2**self.num_agents

    @property
    def grand_mask(self) -> int:
        return 2**self.num_agents - 1

    @property
    def complete(self) -> bool:
        return bool(self.present[1:].all())

    def missing(self) -> list[int]:
        return [m for m in range(1, self.num_coalitions) if not self.present[m]]

    def entry(self, mask: int, agent: int) -> tuple[float, float, int]:
        if not (mask >> agent) & 1:
            raise InvalidInputError(f"agent {agent} is not in {format_coalition(mask)}")
        if not self.present[mask]:
            raise IncompleteTableError(f"no regrets for coalition {format_coalition(mask)}")
        return float(self.means[mask, agent]), float(self.stderr[mask, agent]), int(self.num_reps[mask])

    def require_complete(self) -> None:
        missing = self.missing()
        if missing:
            shown = ", ".join(format_coalition(m) for m in missing[:5])
            raise IncompleteTableError(
                f"regret table is missing {len(missing)} coalition(s): {shown}"
            )

    def label(self, agent: int) -> str:
        return self.labels[agent] if self.labels else str(agent)


def _membership(num_agents: int) -> np.ndarray:
    masks = np.arange(2**num_agents)[:, None]
    return ((masks >> np.arange(num_agents)[None, :]) & 1).astype(bool)


@dataclass(eq=False)
class TUGame:
    """Characteristic function over coalition bitmasks, ``v(empty) = 0``.

    ``samples`` optionally holds one value vector per repetition, shape
    ``(R, 2**M)``; ``values`` is then their mean.
    """

    num_agents: int
    values: np.ndarray
    samples: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (2**self.num_agents,):
            raise InvalidInputError(
                f"value array has shape {self.values.shape}, expected ({2**self.num_agents},)"
            )
        if self.values[0] != 0:
            raise InvalidInputError("the empty coalition must have value 0")
        if self.samples is not None:
            self.samples = np.asarray(self.samples, dtype=float)
            if self.samples.ndim != 2 or self.samples.shape[1] != self.values.size:
                raise InvalidInputError("value samples must have shape (R, 2**M)")

    @classmethod
    def from_function(cls, num_agents: int, fn: Callable[[frozenset], float]) -> "TUGame":
        values = np.array(
            [0.0] + [fn(frozenset(members_of(m))) for m in range(1, 2**num_agents)]
        )
        return cls(num_agents, values)

    @property
    def grand_mask(self) -> int:
        return 2**self.num_agents - 1

    @property
    def grand_value(self) -> float:
        return float(self.values[self.grand_mask])

    @property
    def num_reps(self) -> int:
        return 0 if self.samples is None else self.samples.shape[0]

    @property
    def stderr(self) -> np.ndarray:
        if self.samples is None:
            return np.zeros_like(self.values)
        return _stderr(self.samples, axis=0)

    def __call__(self, coalition: int | Iterable[int]) -> float:
        mask = coalition if isinstance(coalition, (int, np.integer)) else mask_of(coalition)
        return float(self.values[mask])

    def __add__(self, other: "TUGame") -> "TUGame":
        if other.num_agents != self.num_agents:
            raise InvalidInputError("games have different player sets")
        return TUGame(self.num_agents, self.values + other.values)

    def scale(self) -> float:
        return float(max(1.0, np.abs(self.values).max()))

    def repetition(self, r: int) -> "TUGame":
        if self.samples is None:
            raise InvalidInputError("game carries no per-repetition values")
        return TUGame(self.num_agents, self.samples[r])


@dataclass(eq=False)
class Allocation:
    """Per-agent payout with optional uncertainty."""

    payouts: np.ndarray
    provenance: str = "custom"
    stderr: np.ndarray | None = None
    samples: np.ndarray | None = None  # (R, M) per-repetition payouts
    extra: dict = field(default_factory=dict)

    PROVENANCES = ("shapley-exact", "shapley-mc", "grand-coalition-regret", "custom")

    def __post_init__(self) -> None:
        self.payouts = np.asarray(self.payouts, dtype=float).ravel()
        if self.provenance not in self.PROVENANCES:
            raise InvalidInputError(f"unknown provenance {self.provenance!r}")
        if self.samples is not None:
            self.samples = np.asarray(self.samples, dtype=float)
            if self.stderr is None:
                self.stderr = _stderr(self.samples, axis=0)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float).ravel()

    def __len__(self) -> int:
        return self.payouts.size

    def __getitem__(self, agent: int) -> float:
        return float(self.payouts[agent])

    @property
    def total(self) -> float:
        return float(np.sum(self.payouts))


@dataclass
class Violation:
    witness: str
    lhs: float
    rhs: float
    slack: float


@dataclass
class ViolationReport:
    """Outcome of a check; it passes iff no violations were recorded."""

    name: str
    violations: list[Violation] = field(default_factory=list)
    checked: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def add(self, witness: str, lhs: float, rhs: float, slack: float) -> None:
        self.violations.append(Violation(witness, float(lhs), float(rhs), float(slack)))

    def summary(self) -> str:
        status = "pass" if self.passed else f"FAIL ({len(self.violations)} violations)"
        return f"{self.name}: {status} over {self.checked} checks"


def value_from_regrets(table: RegretTable) -> TUGame:
    """``v(C) = -sum_{a in C} R^C_a`` for every coalition, ``v(empty) = 0``."""
    table.require_complete()
    member = _membership(table.num_agents)
    means = np.where(member, table.means, 0.0)
    values = -means.sum(axis=1)
    values[0] = 0.0
    samples = None
    if table.samples is not None:
        raw = np.where(member[None, :, :], table.samples, 0.0)
        samples = -raw.sum(axis=2)
        samples[:, 0] = 0.0
    return TUGame(table.num_agents, values, samples)


def grand_payout(table: RegretTable) -> Allocation:
    """Each agent is paid its negated mean regret in the grand coalition."""
    grand = table.grand_mask
    if not table.present[grand]:
        raise IncompleteTableError("regret table has no grand-coalition row")
    # Same reduction as value_from_regrets so that the payouts sum to v(M) bitwise.
    row = np.where(_membership(table.num_agents)[grand], table.means[grand], 0.0)
    payouts = -row
    samples = None
    if table.samples is not None:
        samples = -table.samples[:, grand, :]
    stderr = table.stderr[grand].copy()
    return Allocation(payouts, "grand-coalition-regret", stderr=stderr, samples=samples)


# ---------------------------------------------------------------------------
# CSV interchange


def write_game_csv(game: TUGame, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "value"])
        for mask, value in enumerate(game.values):
            w.writerow([mask, repr(float(value))])


def read_game_csv(path: str | Path) -> TUGame:
    rows = list(csv.DictReader(open(path, encoding="utf-8")))
    n = len(rows)
    M = n.bit_length() - 1
    if 2**M != n:
        raise InvalidInputError(f"game file has {n} rows, not a power of two")
    values = np.zeros(n)
    for row in rows:
        values[int(row["mask"])] = float(row["value"])
    return TUGame(M, values)


def write_allocation_csv(alloc: Allocation, path: str | Path, labels: Sequence[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["agent", "label", "payout", "stderr", "provenance"])
        se = alloc.stderr if alloc.stderr is not None else np.zeros(len(alloc))
        for a in range(len(alloc)):
            label = labels[a] if labels else str(a)
            w.writerow([a, label, repr(float(alloc.payouts[a])), repr(float(se[a])), alloc.provenance])


def write_regret_table_csv(table: RegretTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "agent", "mean", "stderr", "num_reps"])
        for mask in range(1, table.num_coalitions):
            if not table.present[mask]:
                continue
            for a in members_of(mask):
                w.writerow([mask, a, repr(float(table.means[mask, a])),
                            repr(float(table.stderr[mask, a])), int(table.num_reps[mask])])


def write_raw_regrets_csv(table: RegretTable, path: str | Path) -> None:
    if table.samples is None:
        raise InvalidInputError("table carries no per-repetition samples")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["mask", "agent", "rep", "regret"])
        for mask in range(1, table.num_coalitions):
            if not table.present[mask]:
                continue
            for a in members_of(mask):
                for r in range(table.samples.shape[0]):
                    w.writerow([mask, a, r, repr(float(table.samples[r, mask, a]))])


def read_regret_table_csv(path: str | Path, num_agents: int | None = None) -> RegretTable:
    """Read either the aggregated (mask, agent, mean, stderr, num_reps) layout
    or the raw (mask, agent, rep, regret) layout.

    Without ``num_agents`` the agent count is taken from the largest mask,
    which undercounts when the high-index agents never ran alone or jointly.
    """
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    fields = set(reader.fieldnames or [])
    rows = list(reader)
    if not rows:
        raise InvalidInputError(f"{path}: no rows")
    max_mask = max(int(r["mask"]) for r in rows)
    M = num_agents or max_mask.bit_length()
    if max_mask >= 2**M:
        raise InvalidInputError(f"{path}: mask {max_mask} needs more than {M} agents")
    if {"rep", "regret"} <= fields:
        R = max(int(r["rep"]) for r in rows) + 1
        samples = np.full((R, 2**M, M), np.nan)
        present = np.zeros(2**M, dtype=bool)
        for r in rows:
            samples[int(r["rep"]), int(r["mask"]), int(r["agent"])] = float(r["regret"])
            present[int(r["mask"])] = True
        return RegretTable.from_samples(M, samples, present)
    if {"mean", "stderr"} <= fields:
        entries = {
            (int(r["mask"]), int(r["agent"])): (
                float(r["mean"]), float(r["stderr"]), int(r.get("num_reps") or 1)
            )
            for r in rows
        }
        return RegretTable.from_entries(M, entries)
    raise InvalidInputError(f"{path}: unrecognised regret table columns {sorted(fields)}")
