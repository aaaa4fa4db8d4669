"""Workload generation, execution-time model and trace files."""

from __future__ import annotations

import csv
import hashlib
import io
import os
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .malleability import SpawnStrategy
from .scheduler import MalleabilityLimits

TRACE_MAGIC = "#malsim-trace-v1"
TRACE_COLUMNS = ["id", "arrival_s", "lower", "upper", "preferred", "stride", "iterations", "strategy"]


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class ExecutionModel:
    step_time_table: Mapping[int, float]
    iterations: int = 20

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        table = dict(sorted(self.step_time_table.items()))
        if not table:
            raise ValueError("empty step-time table")
        prev = None
        for nodes, t in table.items():
            if t <= 0:
                raise ValueError(f"step time for {nodes} nodes must be positive, got {t}")
            if prev is not None and t > prev:
                raise ValueError(f"step time grows from {prev} to {t} at {nodes} nodes")
            prev = t
        object.__setattr__(self, "step_time_table", table)

    @classmethod
    def strong_scaling(cls, sizes: Iterable[int], ref_nodes: int, ref_step: float,
                       alpha: float, iterations: int = 20,
                       overrides: Mapping[int, float] | None = None) -> "ExecutionModel":
        """``T(n) = T(ref) * (ref / n) ** alpha`` for every size, then overrides."""
        table = {n: ref_step * (ref_nodes / n) ** alpha for n in sizes}
        table[ref_nodes] = ref_step
        table.update(overrides or {})
        return cls(table, iterations)


def step_time(model: ExecutionModel, nodes: int) -> float:
    try:
        return model.step_time_table[nodes]
    except KeyError:
        raise KeyError(f"no step time for {nodes} nodes (have {sorted(model.step_time_table)})") from None


@dataclass(frozen=True)
class JobSpec:
    id: int
    arrival_time: float
    limits: MalleabilityLimits
    model: ExecutionModel
    strategy: SpawnStrategy = SpawnStrategy.BASELINE
    element_size: int = 8
    redistributable_elements: tuple[int, ...] = ()


@dataclass(frozen=True)
class WorkloadConfig:
    job_count: int = 1000
    inter_arrival: float = 1.0
    seed: int = 0
    arrival_jitter: float = 0.0
    limits: MalleabilityLimits = field(default_factory=MalleabilityLimits)
    iterations: int = 20
    ref_nodes: int = 4
    ref_step_time: float = 0.7335
    scaling_alpha: float = 0.9
    step_time_overrides: Mapping[int, float] = field(default_factory=dict)
    strategy: SpawnStrategy = SpawnStrategy.BASELINE
    element_size: int = 8
    grid: tuple[int, int, int] = (1024, 127, 31)   # n, m, l
    arrays: int = 4

    def __post_init__(self):
        if self.job_count < 1:
            raise ValueError(f"job_count must be >= 1, got {self.job_count}")
        if self.inter_arrival < 0 or self.arrival_jitter < 0:
            raise ValueError("inter_arrival and arrival_jitter must be non-negative")

    def model(self, iterations: int | None = None) -> ExecutionModel:
        sizes = set(self.limits.ladder()) | {self.ref_nodes}
        return ExecutionModel.strong_scaling(
            sorted(sizes), self.ref_nodes, self.ref_step_time, self.scaling_alpha,
            iterations or self.iterations, self.step_time_overrides,
        )

    def elements_per_array(self) -> int:
        n, m, l = self.grid
        return n * (m + 1) * (l + 1)


def generate(config: WorkloadConfig) -> list[JobSpec]:
    rng = random.Random(config.seed)
    model = config.model()
    elems = (config.elements_per_array(),) * config.arrays
    jobs = []
    last = 0.0
    for i in range(config.job_count):
        t = i * config.inter_arrival
        if config.arrival_jitter:
            t = max(last, t + rng.uniform(0.0, config.arrival_jitter))
        last = t
        jobs.append(JobSpec(i, t, config.limits, model, config.strategy,
                            config.element_size, elems))
    return jobs


def _row(job: JobSpec) -> list[str]:
    lim = job.limits
    return [str(job.id), repr(float(job.arrival_time)), str(lim.lower), str(lim.upper),
            str(lim.preferred), str(lim.stride), str(job.model.iterations), job.strategy.value]


def dumps_trace(jobs: Iterable[JobSpec]) -> str:
    buf = io.StringIO()
    buf.write(TRACE_MAGIC + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for job in jobs:
        w.writerow(_row(job))
    return buf.getvalue()


def save_trace(jobs: Iterable[JobSpec], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dumps_trace(jobs))


def trace_hash(jobs: Iterable[JobSpec]) -> str:
    """Fingerprint of the job stream.

    The spawn strategy is left out: it follows the policy being compared, not
    the workload.
    """
    h = hashlib.sha256()
    for job in jobs:
        h.update(",".join(_row(job)[:-1]).encode())
        h.update(repr(sorted(job.model.step_time_table.items())).encode())
        h.update(f"{job.element_size}:{job.redistributable_elements}\n".encode())
    return h.hexdigest()[:16]


def load_trace(path: str | os.PathLike, template: WorkloadConfig | None = None) -> list[JobSpec]:
    """Read a trace; execution model and array sizes come from ``template``."""
    template = template or WorkloadConfig()
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise TraceError(f"{path}: line 1: empty trace")
    if lines[0].strip() != TRACE_MAGIC:
        raise TraceError(f"{path}: line 1: expected header {TRACE_MAGIC!r}")
    if len(lines) < 2 or lines[1].strip().split(",") != TRACE_COLUMNS:
        raise TraceError(f"{path}: line 2: expected columns {','.join(TRACE_COLUMNS)}")
    elems = (template.elements_per_array(),) * template.arrays
    models: dict[tuple, ExecutionModel] = {}
    jobs = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            raise TraceError(f"{path}: line {lineno}: blank line inside trace")
        cells = next(csv.reader([line]))
        if len(cells) != len(TRACE_COLUMNS):
            raise TraceError(f"{path}: line {lineno}: expected {len(TRACE_COLUMNS)} fields, got {len(cells)}")
        try:
            jid, arrival = int(cells[0]), float(cells[1])
            lower, upper, preferred, stride, iters = (int(c) for c in cells[2:7])
            limits = MalleabilityLimits(lower, upper, preferred, stride)
            strategy = SpawnStrategy.parse(cells[7])
            key = (iters, limits)
            if key not in models:
                models[key] = replace(template, limits=limits).model(iters)
            model = models[key]
            step_time(model, lower)
        except (ValueError, KeyError) as exc:
            raise TraceError(f"{path}: line {lineno}: {exc}") from None
        if jobs and arrival < jobs[-1].arrival_time:
            raise TraceError(f"{path}: line {lineno}: arrival times must be nondecreasing")
        jobs.append(JobSpec(jid, arrival, limits, model, strategy, template.element_size, elems))
    if not jobs:
        raise TraceError(f"{path}: line 3: trace has no jobs")
    return jobs
