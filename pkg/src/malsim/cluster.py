"""Whole-node allocation bookkeeping and per-node busy intervals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable


class AllocationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClusterConfig:
    node_count: int = 8
    ranks_per_node: int = 16

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {self.node_count}")
        if self.ranks_per_node < 1:
            raise ValueError(f"ranks_per_node must be >= 1, got {self.ranks_per_node}")


@dataclass
class Allocation:
    job: Hashable
    nodes: frozenset[int]
    since: float
    live: bool = True

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass
class NodeTimeline:
    """Closed-open busy intervals ``[start, end)`` for one node."""

    intervals: list[tuple[float, float]] = field(default_factory=list)
    open_since: float | None = None

    def busy_time(self) -> float:
        return sum(e - s for s, e in self.intervals)


class Cluster:
    """Node inventory.

    ``clock`` is any zero-argument callable returning the current simulated
    time; timelines are opened and closed at that time. A released node stays
    unallocatable (and idle) for ``drain_time`` seconds, the node epilog.
    """

    def __init__(self, config: ClusterConfig | None = None, clock: Callable[[], float] | None = None,
                 drain_time: float = 0.0):
        if drain_time < 0:
            raise ValueError("drain_time must be non-negative")
        self.config = config or ClusterConfig()
        self._clock = clock or (lambda: 0.0)
        self.drain_time = drain_time
        self._free = set(range(self.config.node_count))
        self._draining: dict[int, float] = {}
        self._allocs: dict[Hashable, Allocation] = {}
        self.timelines = [NodeTimeline() for _ in range(self.config.node_count)]

    @property
    def node_count(self) -> int:
        return self.config.node_count

    def _settle(self) -> None:
        if self._draining:
            now = self._clock()
            for n in [n for n, t in self._draining.items() if t <= now]:
                del self._draining[n]
                self._free.add(n)

    def _give_back(self, nodes) -> None:
        if self.drain_time > 0:
            ready = self._clock() + self.drain_time
            for n in nodes:
                self._draining[n] = ready
        else:
            self._free.update(nodes)

    def available_nodes(self) -> int:
        self._settle()
        return len(self._free)

    def draining_nodes(self) -> int:
        self._settle()
        return len(self._draining)

    def allocation(self, job) -> Allocation | None:
        return self._allocs.get(job)

    def live_allocations(self) -> list[Allocation]:
        return list(self._allocs.values())

    def _open(self, nodes, now):
        for n in nodes:
            tl = self.timelines[n]
            assert tl.open_since is None, f"node {n} already busy"
            tl.open_since = now

    def _close(self, nodes, now):
        for n in nodes:
            tl = self.timelines[n]
            if tl.open_since is None:
                raise AllocationError(f"node {n} is not busy")
            if now > tl.open_since:
                tl.intervals.append((tl.open_since, now))
            tl.open_since = None

    def _take_lowest(self, count: int) -> list[int]:
        return sorted(self._free)[:count]

    def allocate(self, job, nodes: int) -> Allocation:
        if job in self._allocs:
            raise AllocationError(f"job {job} already holds an allocation")
        if nodes < 1:
            raise AllocationError(f"allocation size must be >= 1, got {nodes}")
        if nodes > self.available_nodes():
            raise AllocationError(
                f"job {job} asked for {nodes} nodes, only {self.available_nodes()} free"
            )
        now = self._clock()
        picked = self._take_lowest(nodes)
        self._free.difference_update(picked)
        self._open(picked, now)
        alloc = Allocation(job, frozenset(picked), now)
        self._allocs[job] = alloc
        return alloc

    def resize(self, alloc: Allocation, new_nodes: int) -> Allocation:
        """Grow by the lowest free nodes or shrink by dropping the highest held."""
        if not alloc.live or self._allocs.get(alloc.job) is not alloc:
            raise AllocationError(f"allocation of job {alloc.job} is not live")
        if new_nodes < 1:
            raise AllocationError(f"allocation size must be >= 1, got {new_nodes}")
        cur = alloc.size
        if new_nodes == cur:
            return alloc
        now = self._clock()
        if new_nodes > cur:
            delta = new_nodes - cur
            if delta > self.available_nodes():
                raise AllocationError(
                    f"job {alloc.job} cannot grow by {delta}: {self.available_nodes()} free"
                )
            added = self._take_lowest(delta)
            self._free.difference_update(added)
            self._open(added, now)
            held = alloc.nodes | frozenset(added)
        else:
            dropped = sorted(alloc.nodes)[new_nodes:]
            self._close(dropped, now)
            self._give_back(dropped)
            held = alloc.nodes - frozenset(dropped)
        alloc.live = False
        updated = Allocation(alloc.job, held, alloc.since)
        self._allocs[alloc.job] = updated
        return updated

    def release(self, alloc: Allocation) -> None:
        if not alloc.live or self._allocs.get(alloc.job) is not alloc:
            raise AllocationError(f"allocation of job {alloc.job} is not live (double release?)")
        self._close(alloc.nodes, self._clock())
        self._give_back(alloc.nodes)
        alloc.live = False
        del self._allocs[alloc.job]

    def check_conservation(self) -> None:
        held = sum(a.size for a in self._allocs.values())
        free, draining = self.available_nodes(), self.draining_nodes()
        if held + free + draining != self.node_count:
            raise AllocationError(
                f"node conservation broken: {held} held + {free} free + {draining} draining"
            )

    def busy_times(self) -> list[float]:
        return [tl.busy_time() for tl in self.timelines]
