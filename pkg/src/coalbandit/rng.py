"""Keyed random streams.

Every draw in a simulation comes from a stream keyed by
``(coalition mask, repetition, agent, purpose)``.  Runs can therefore be
executed in any order, or in parallel, without changing a single number.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace

import numpy as np

# Agent slot used for streams that do not belong to a single agent.
SHARED = 0xFFFF


def _purpose_id(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    """A deterministic random stream identified by a seed and a key."""

    seed: int
    mask: int = 0
    rep: int = 0
    agent: int = SHARED
    purpose: str = "noise"

    def __post_init__(self) -> None:
        if self.seed < 0 or self.mask < 0 or self.rep < 0 or self.agent < 0:
            raise ValueError("seed and stream key components must be non-negative")

    @property
    def key(self) -> tuple[int, int, int, int]:
        return (self.mask, self.rep, self.agent, _purpose_id(self.purpose))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(self.seed & (2**64 - 1), spawn_key=self.key)
        return np.random.default_rng(seq)

    def child(self, agent: int | None = None, purpose: str | None = None) -> "RngStream":
        changes = {}
        if agent is not None:
            changes["agent"] = agent
        if purpose is not None:
            changes["purpose"] = purpose
        return replace(self, **changes)

    def for_run(self, mask: int, rep: int) -> "RngStream":
        return replace(self, mask=mask, rep=rep)
