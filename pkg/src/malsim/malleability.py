"""Job-side reconfiguration bookkeeping: inhibitor, spawn arithmetic, cost model."""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields


class SpawnStrategy(enum.Enum):
    BASELINE = "baseline"
    MERGE = "merge"

    @classmethod
    def parse(cls, name: str) -> "SpawnStrategy":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown strategy {name!r} (expected baseline or merge)") from None


class ReconfigPhase(enum.Enum):
    STEADY = "steady"
    PENDING_COMPLETION = "pending"


@dataclass
class ReconfigState:
    phase: ReconfigPhase = ReconfigPhase.STEADY
    reconfig_count: int = 0


@dataclass
class InhibitorCounter:
    period: int = 2
    last_check_iter: int | None = None

    def __post_init__(self):
        if self.period < 1:
            raise ValueError(f"inhibitor period must be >= 1, got {self.period}")


def check_allowed(inhibitor: InhibitorCounter, iteration: int) -> bool:
    """Throttle reconfiguration checks to one every ``period`` iterations.

    Every allowed check restarts the window, whatever the scheduler answers.
    """
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    last = inhibitor.last_check_iter
    if last is None or iteration - last >= inhibitor.period:
        inhibitor.last_check_iter = iteration
        return True
    return False


def spawn_count(strategy: SpawnStrategy, np_old: int, nt_new: int) -> int:
    if np_old < 1 or nt_new < 1:
        raise ValueError(f"process counts must be >= 1, got NP={np_old} NT={nt_new}")
    if strategy is SpawnStrategy.BASELINE:
        return nt_new
    return max(0, nt_new - np_old)


def effective_strategy(configured: SpawnStrategy, reconfig_count: int) -> SpawnStrategy:
    # the first resize always respawns everything so released nodes are really empty
    if reconfig_count == 0:
        return SpawnStrategy.BASELINE
    return configured


@dataclass(frozen=True)
class CostParams:
    spawn_cost: float = 0.02        # s per spawned process
    redist_bandwidth: float = 12.5e9  # B/s aggregate
    redist_latency: float = 1e-5    # s per message
    base_overhead: float = 0.5      # s per reconfiguration

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def scaled(self, factor: float) -> "CostParams":
        return CostParams(
            spawn_cost=self.spawn_cost * factor,
            redist_bandwidth=self.redist_bandwidth / factor if factor else 0.0,
            redist_latency=self.redist_latency * factor,
            base_overhead=self.base_overhead * factor,
        )


def reconfiguration_overhead(
    strategy: SpawnStrategy,
    np_old: int,
    nt_new: int,
    network_bytes: int,
    message_count: int,
    params: CostParams,
) -> float:
    # zero bandwidth switches the transfer term off (all-zero params cost nothing)
    transfer = network_bytes / params.redist_bandwidth if params.redist_bandwidth > 0 else 0.0
    return (
        params.base_overhead
        + params.spawn_cost * spawn_count(strategy, np_old, nt_new)
        + params.redist_latency * message_count
        + transfer
    )
