"""Deterministic discrete-event core.

Events are ordered by ``(time, seq)`` where ``seq`` is a counter assigned at
insertion, so equal-time events come out in FIFO order and two runs over the
same inputs process events in the same order.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, TextIO


class EventKind(enum.Enum):
    JobArrival = "JobArrival"
    JobStartAttempt = "JobStartAttempt"
    IterationComplete = "IterationComplete"
    ReconfigRequest = "ReconfigRequest"
    ReconfigComplete = "ReconfigComplete"
    JobComplete = "JobComplete"


class SimulationError(RuntimeError):
    """Raised when the simulation hits an internal inconsistency."""


class CausalityError(SimulationError):
    pass


@dataclass(order=True)
class Event:
    time: float
    seq: int
    kind: EventKind = field(compare=False)
    job: Any = field(compare=False, default=None)
    data: dict = field(compare=False, default_factory=dict)


@dataclass
class SimClock:
    now: float = 0.0


def _fmt_time(t: float) -> str:
    return repr(float(t))


class Engine:
    """Virtual clock plus a heap of pending events."""

    def __init__(self, log: TextIO | None = None):
        self.clock = SimClock()
        self._queue: list[Event] = []
        self._seq = 0
        self._handlers: dict[EventKind, Callable[[Event], None]] = {}
        self._log = log
        self.processed = 0

    @property
    def now(self) -> float:
        return self.clock.now

    def __len__(self) -> int:
        return len(self._queue)

    def on(self, kind: EventKind, handler: Callable[[Event], None]) -> None:
        self._handlers[kind] = handler

    def schedule(self, event: Event) -> Event:
        if event.time < self.clock.now:
            raise CausalityError(
                f"event {event.kind.value} at t={event.time!r} is before now={self.clock.now!r}"
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, event)
        return event

    def at(self, time: float, kind: EventKind, job: Any = None, **data) -> Event:
        """Convenience wrapper around :meth:`schedule`."""
        return self.schedule(Event(time, -1, kind, job, data))

    def after(self, delay: float, kind: EventKind, job: Any = None, **data) -> Event:
        return self.at(self.clock.now + delay, kind, job, **data)

    def run(self, until: float | None = None) -> SimClock:
        while self._queue:
            if until is not None and self._queue[0].time > until:
                break
            ev = heapq.heappop(self._queue)
            handler = self._handlers.get(ev.kind)
            if handler is None:
                raise SimulationError(f"no handler registered for {ev.kind.value}")
            self.clock.now = ev.time
            if self._log is not None:
                self._write(ev)
            handler(ev)
            self.processed += 1
        return self.clock

    def _write(self, ev: Event) -> None:
        job = "-" if ev.job is None else str(ev.job)
        detail = ",".join(f"{k}={v}" for k, v in sorted(ev.data.items())) or "-"
        self._log.write(f"{_fmt_time(ev.time)}\t{ev.kind.value}\t{job}\t{detail}\n")
