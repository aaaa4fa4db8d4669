"""Block redistribution of a distributed 1D array between process groups.

Rank ``r`` of ``P`` owns ``[floor(r*L/P), floor((r+1)*L/P))``. A plan lists
the point-to-point messages that move every element from its owner in the
old group to its owner in the new group.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .malleability import SpawnStrategy


class Message(NamedTuple):
    src: int
    dst: int
    offset: int
    length: int


@dataclass(frozen=True)
class BlockDistribution:
    total_len: int
    parts: int

    def __post_init__(self):
        if self.parts < 1:
            raise ValueError(f"parts must be >= 1, got {self.parts}")
        if self.total_len < 0:
            raise ValueError(f"total_len must be >= 0, got {self.total_len}")

    def range(self, rank: int) -> tuple[int, int]:
        return block_range(rank, self.parts, self.total_len)

    def sizes(self) -> list[int]:
        return [hi - lo for lo, hi in map(self.range, range(self.parts))]


def block_range(rank: int, parts: int, total_len: int) -> tuple[int, int]:
    if not 0 <= rank < parts:
        raise ValueError(f"rank {rank} out of range for {parts} parts")
    return rank * total_len // parts, (rank + 1) * total_len // parts


@dataclass(frozen=True)
class TransferPlan:
    np_old: int
    nt_new: int
    total_len: int
    messages: tuple[Message, ...]


@dataclass(frozen=True)
class PlanAccounting:
    network_bytes: int
    local_bytes: int
    message_count: int


def compute_plan(np_old: int, nt_new: int, total_len: int) -> TransferPlan:
    """Intersect old and new blocks with a two-pointer sweep."""
    if np_old < 1 or nt_new < 1:
        raise ValueError(f"process counts must be >= 1, got NP={np_old} NT={nt_new}")
    msgs = []
    s = 0
    s_lo, s_hi = block_range(0, np_old, total_len)
    for d in range(nt_new):
        d_lo, d_hi = block_range(d, nt_new, total_len)
        pos = d_lo
        while pos < d_hi:
            while s_hi <= pos:
                s += 1
                s_lo, s_hi = block_range(s, np_old, total_len)
            end = min(d_hi, s_hi)
            msgs.append(Message(s, d, pos, end - pos))
            pos = end
    return TransferPlan(np_old, nt_new, total_len, tuple(msgs))


def account(plan: TransferPlan, strategy: SpawnStrategy, element_size: int) -> PlanAccounting:
    local = 0
    network = 0
    kept = min(plan.np_old, plan.nt_new)
    for m in plan.messages:
        nbytes = m.length * element_size
        # only merge keeps old ranks alive, so only there can a rank send to itself
        if strategy is SpawnStrategy.MERGE and m.src == m.dst and m.src < kept:
            local += nbytes
        else:
            network += nbytes
    return PlanAccounting(network, local, len(plan.messages))


def apply_plan(plan: TransferPlan, old_shards: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Move data according to ``plan``.

    Shards are arrays whose first axis is the distributed one, so a shard may
    hold planes of a 3D field as well as scalars. Destination positions not
    covered by the plan are left zero.
    """
    if len(old_shards) != plan.np_old:
        raise ValueError(f"expected {plan.np_old} shards, got {len(old_shards)}")
    trailing = None
    for r, shard in enumerate(old_shards):
        lo, hi = block_range(r, plan.np_old, plan.total_len)
        if shard.shape[0] != hi - lo:
            raise ValueError(f"shard {r} has length {shard.shape[0]}, expected {hi - lo}")
        if trailing is None:
            trailing, dtype = shard.shape[1:], shard.dtype
        elif shard.shape[1:] != trailing:
            raise ValueError(f"shard {r} has trailing shape {shard.shape[1:]}, expected {trailing}")
    new = []
    for d in range(plan.nt_new):
        lo, hi = block_range(d, plan.nt_new, plan.total_len)
        new.append(np.zeros((hi - lo,) + trailing, dtype=dtype))
    for m in plan.messages:
        s_lo = block_range(m.src, plan.np_old, plan.total_len)[0]
        d_lo = block_range(m.dst, plan.nt_new, plan.total_len)[0]
        new[m.dst][m.offset - d_lo:m.offset - d_lo + m.length] = (
            old_shards[m.src][m.offset - s_lo:m.offset - s_lo + m.length]
        )
    return new


def split(array: np.ndarray, parts: int) -> list[np.ndarray]:
    """Block-distribute ``array`` along its first axis."""
    n = array.shape[0]
    return [array[lo:hi].copy() for lo, hi in (block_range(r, parts, n) for r in range(parts))]


def gather(shards: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(list(shards), axis=0)
