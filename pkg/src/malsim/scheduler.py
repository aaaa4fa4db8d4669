"""Priority/FCFS job queue, moldable start sizing and the reconfiguration policy."""

from __future__ import annotations

import enum
import heapq
import itertools
from dataclasses import dataclass, field
from typing import Hashable, Iterator


class Policy(enum.Enum):
    STATIC = "static"
    DYNRES_BASELINE = "dynres-baseline"
    DYNRES_MERGE = "dynres-merge"

    @property
    def malleable(self) -> bool:
        return self is not Policy.STATIC

    @classmethod
    def parse(cls, name: str) -> "Policy":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown policy {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class MalleabilityLimits:
    """Node bounds, sweet spot and multiplicative stride of a malleable job."""

    lower: int = 1
    upper: int = 4
    preferred: int = 2
    stride: int = 2

    def __post_init__(self):
        if self.lower < 1:
            raise ValueError(f"lower must be >= 1, got {self.lower}")
        if self.stride < 2:
            raise ValueError(f"stride must be >= 2, got {self.stride}")
        if not self.lower <= self.preferred <= self.upper:
            raise ValueError(
                f"need lower <= preferred <= upper, got {self.lower}, {self.preferred}, {self.upper}"
            )
        ladder = self.ladder()
        for name in ("preferred", "upper"):
            if getattr(self, name) not in ladder:
                raise ValueError(f"{name}={getattr(self, name)} is not on the stride ladder {ladder}")

    def ladder(self) -> tuple[int, ...]:
        sizes = []
        n = self.lower
        while n <= self.upper:
            sizes.append(n)
            n *= self.stride
        return tuple(sizes)


class Verdict(enum.Enum):
    EXPAND = "expand"
    SHRINK = "shrink"
    NONE = "none"


@dataclass(frozen=True)
class ReconfigDecision:
    verdict: Verdict
    target: int | None = None
    bump_priority: bool = False

    @classmethod
    def none(cls) -> "ReconfigDecision":
        return cls(Verdict.NONE)

    def __str__(self):
        if self.verdict is Verdict.NONE:
            return "none"
        return f"{self.verdict.value}({self.target})"


def select_start_size(limits: MalleabilityLimits, avail: int) -> int | None:
    """Largest ladder size that fits in ``avail`` nodes, or None if even ``lower`` does not."""
    best = None
    for size in limits.ladder():
        if size <= avail:
            best = size
    return best


def decide_reconfiguration(
    current: int,
    limits: MalleabilityLimits,
    pending: bool,
    avail: int,
    head_pending_lower: int | None,
) -> ReconfigDecision:
    """Expand/shrink/none verdict for a job at a synchronization point.

    Shrinking additionally requires ``current > preferred`` (strict). When a
    pending job could start from the resources a shrink would free but the job
    sits exactly at its sweet spot, nothing happens rather than expanding.
    """
    if current not in limits.ladder():
        raise ValueError(f"current size {current} is not on the ladder {limits.ladder()}")
    grown = current * limits.stride
    expandable = grown <= limits.upper and grown - current <= avail
    expand = ReconfigDecision(Verdict.EXPAND, grown) if expandable else ReconfigDecision.none()

    if not pending:
        return expand
    if current < limits.preferred:
        return expand

    halved = current // limits.stride
    head_fits = head_pending_lower is not None and avail + (current - halved) >= head_pending_lower
    if head_fits:
        if current > limits.preferred and halved >= limits.lower:
            return ReconfigDecision(Verdict.SHRINK, halved, bump_priority=True)
        return ReconfigDecision.none()
    return expand


@dataclass
class QueueEntry:
    job: Hashable
    submit_time: float
    limits: MalleabilityLimits
    priority: int = 0

    def sort_key(self):
        return (-self.priority, self.submit_time, self.job)


@dataclass
class JobQueue:
    """Pending jobs ordered by (priority desc, submit time, job id).

    Priority changes push a fresh heap item; superseded items are skipped
    lazily when they surface.
    """

    _heap: list = field(default_factory=list)
    _live: dict = field(default_factory=dict)
    _tick: Iterator[int] = field(default_factory=itertools.count)

    def __len__(self) -> int:
        return len(self._live)

    def __bool__(self) -> bool:
        return bool(self._live)

    def __contains__(self, job) -> bool:
        return job in self._live

    def push(self, entry: QueueEntry) -> None:
        if entry.job in self._live:
            raise ValueError(f"job {entry.job} already queued")
        self._insert(entry)

    def _insert(self, entry: QueueEntry) -> None:
        tag = next(self._tick)
        self._live[entry.job] = (tag, entry)
        heapq.heappush(self._heap, (entry.sort_key(), tag, entry))

    def _prune(self) -> None:
        while self._heap:
            _, tag, entry = self._heap[0]
            cur = self._live.get(entry.job)
            if cur is not None and cur[0] == tag:
                return
            heapq.heappop(self._heap)

    def head(self) -> QueueEntry | None:
        self._prune()
        return self._heap[0][2] if self._heap else None

    def pop(self) -> QueueEntry:
        self._prune()
        if not self._heap:
            raise IndexError("pop from empty queue")
        _, _, entry = heapq.heappop(self._heap)
        del self._live[entry.job]
        return entry

    def bump(self, job, amount: int = 1) -> None:
        _, entry = self._live[job]
        entry.priority += amount
        self._insert(entry)

    def entries(self) -> list[QueueEntry]:
        return sorted((e for _, e in self._live.values()), key=QueueEntry.sort_key)


class Scheduler:
    """Strict-priority queue in front of a :class:`~malsim.cluster.Cluster`.

    ``start_job`` is called as ``start_job(job, nodes)`` for every job the
    scheduler decides to launch; the caller performs the allocation.
    """

    def __init__(self, cluster, policy: Policy = Policy.DYNRES_BASELINE, start_job=None):
        self.cluster = cluster
        self.policy = policy
        self.queue = JobQueue()
        self.start_job = start_job

    def submit(self, entry: QueueEntry) -> None:
        self.queue.push(entry)

    def start_size(self, limits: MalleabilityLimits, avail: int) -> int | None:
        if self.policy is Policy.STATIC:
            return limits.upper if limits.upper <= avail else None
        return select_start_size(limits, avail)

    def on_resources_freed(self) -> list[tuple]:
        """Start queued jobs in strict priority order until the head does not fit."""
        started = []
        while self.queue:
            head = self.queue.head()
            size = self.start_size(head.limits, self.cluster.available_nodes())
            if size is None:
                break
            self.queue.pop()
            if self.start_job is not None:
                self.start_job(head.job, size)
            else:
                self.cluster.allocate(head.job, size)
            started.append((head.job, size))
        return started

    def decide(self, current: int, limits: MalleabilityLimits) -> ReconfigDecision:
        if not self.policy.malleable:
            return ReconfigDecision.none()
        head = self.queue.head()
        decision = decide_reconfiguration(
            current,
            limits,
            pending=head is not None,
            avail=self.cluster.available_nodes(),
            head_pending_lower=None if head is None else self.start_floor(head.limits),
        )
        if decision.bump_priority and head is not None:
            self.queue.bump(head.job)
        return decision

    def start_floor(self, limits: MalleabilityLimits) -> int:
        """Fewest nodes the job can start with under the active policy."""
        return limits.upper if self.policy is Policy.STATIC else limits.lower
