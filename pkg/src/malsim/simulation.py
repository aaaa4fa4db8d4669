"""Event handlers driving jobs through the cluster under a scheduling policy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from . import redistribution as rd
from .cluster import AllocationError, Cluster, ClusterConfig
from .engine import Engine, EventKind, SimulationError
from .malleability import (
    CostParams,
    InhibitorCounter,
    ReconfigPhase,
    ReconfigState,
    SpawnStrategy,
    check_allowed,
    effective_strategy,
    reconfiguration_overhead,
)
from .metrics import JobRecord, WorkloadReport, summarize
from .scheduler import Policy, QueueEntry, Scheduler, Verdict
from .workload import JobSpec, step_time

log = logging.getLogger(__name__)


class InvariantViolation(SimulationError):
    pass


@dataclass
class _Job:
    spec: JobSpec
    record: JobRecord
    inhibitor: InhibitorCounter
    state: ReconfigState = field(default_factory=ReconfigState)
    nodes: int = 0
    iteration: int = 0
    overhead_total: float = 0.0
    network_bytes: int = 0


@dataclass
class SimulationResult:
    policy: Policy
    records: list[JobRecord]
    timelines: list
    makespan: float
    events: int

    def report(self) -> WorkloadReport:
        return summarize(self.records, self.timelines, self.makespan, self.policy.value)


class Simulation:
    def __init__(
        self,
        jobs: Sequence[JobSpec],
        cluster: ClusterConfig | None = None,
        policy: Policy = Policy.DYNRES_BASELINE,
        cost: CostParams | None = None,
        *,
        inhibit_iter: int = 2,
        node_drain: float = 0.0,
        log_file: TextIO | None = None,
    ):
        self.engine = Engine(log_file)
        self.cluster = Cluster(cluster or ClusterConfig(), clock=lambda: self.engine.now,
                               drain_time=node_drain)
        self.policy = policy
        self.cost = cost or CostParams()
        self.scheduler = Scheduler(self.cluster, policy, start_job=self._start_job)
        self.jobs: dict[int, _Job] = {}
        self._attempts: set[float] = set()
        self.overhead_calls = 0
        for spec in jobs:
            if spec.id in self.jobs:
                raise ValueError(f"duplicate job id {spec.id}")
            if policy is Policy.STATIC and spec.limits.upper > self.cluster.node_count:
                raise ValueError(f"job {spec.id} needs {spec.limits.upper} nodes, cluster has {self.cluster.node_count}")
            if spec.limits.lower > self.cluster.node_count:
                raise ValueError(f"job {spec.id} can never start: lower={spec.limits.lower}")
            self.jobs[spec.id] = _Job(spec, JobRecord(spec.id, spec.arrival_time),
                                      InhibitorCounter(inhibit_iter))
        e = self.engine
        e.on(EventKind.JobArrival, self._on_arrival)
        e.on(EventKind.JobStartAttempt, self._on_start_attempt)
        e.on(EventKind.IterationComplete, self._on_iteration)
        e.on(EventKind.ReconfigRequest, self._on_reconfig_request)
        e.on(EventKind.ReconfigComplete, self._on_reconfig_complete)
        e.on(EventKind.JobComplete, self._on_complete)
        for job in self.jobs.values():
            e.at(job.spec.arrival_time, EventKind.JobArrival, job.spec.id)

    # -- helpers -----------------------------------------------------------

    def _request_start(self, delay: float = 0.0):
        t = self.engine.now + delay
        if t not in self._attempts:
            self._attempts.add(t)
            self.engine.at(t, EventKind.JobStartAttempt)

    def _next_iteration(self, job: _Job):
        self.engine.after(step_time(job.spec.model, job.nodes), EventKind.IterationComplete,
                          job.spec.id, iter=job.iteration)

    def _start_job(self, job_id, nodes):
        job = self.jobs[job_id]
        self.cluster.allocate(job_id, nodes)
        job.nodes = nodes
        job.record.start = self.engine.now
        job.record.size_changes.append((self.engine.now, nodes))
        self._next_iteration(job)

    def _check(self, job: _Job | None = None):
        self.cluster.check_conservation()
        if job is not None and job.nodes not in job.spec.limits.ladder():
            raise InvariantViolation(f"job {job.spec.id} holds {job.nodes} nodes, off its ladder")

    # -- handlers ----------------------------------------------------------

    def _on_arrival(self, ev):
        job = self.jobs[ev.job]
        self.scheduler.submit(QueueEntry(ev.job, self.engine.now, job.spec.limits))
        self._request_start()

    def _on_start_attempt(self, ev):
        self._attempts.discard(ev.time)
        for job_id, _ in self.scheduler.on_resources_freed():
            self._check(self.jobs[job_id])

    def _on_iteration(self, ev):
        job = self.jobs[ev.job]
        done = ev.data["iter"]
        job.iteration = done + 1
        if job.iteration >= job.spec.model.iterations:
            self.engine.at(self.engine.now, EventKind.JobComplete, ev.job)
        elif self.policy.malleable and check_allowed(job.inhibitor, done):
            self.engine.at(self.engine.now, EventKind.ReconfigRequest, ev.job, iter=job.iteration)
        else:
            self._next_iteration(job)

    def _on_reconfig_request(self, ev):
        job = self.jobs[ev.job]
        decision = self.scheduler.decide(job.nodes, job.spec.limits)
        if decision.verdict is Verdict.NONE:
            self._next_iteration(job)
            return
        self.apply_reconfiguration(job, decision.target)

    def apply_reconfiguration(self, job: _Job, target: int) -> bool:
        """Start a synchronous resize of ``job`` to ``target`` nodes.

        Growth takes the new nodes immediately (processes are spawned on
        them); a shrink hands nodes back only once redistribution is over.
        Returns False when the cluster refuses the growth.
        """
        rpn = self.cluster.config.ranks_per_node
        np_old, nt_new = job.nodes * rpn, target * rpn
        if target > job.nodes:
            try:
                self.cluster.resize(self.cluster.allocation(job.spec.id), target)
            except AllocationError as exc:
                log.debug("job %s: expansion refused (%s)", job.spec.id, exc)
                self._next_iteration(job)
                return False
            job.record.size_changes.append((self.engine.now, target))
        strategy = effective_strategy(job.spec.strategy, job.state.reconfig_count)
        network = messages = 0
        for length in job.spec.redistributable_elements:
            plan = rd.compute_plan(np_old, nt_new, length)
            acct = rd.account(plan, strategy, job.spec.element_size)
            network += acct.network_bytes
            messages += acct.message_count
        overhead = reconfiguration_overhead(strategy, np_old, nt_new, network, messages, self.cost)
        self.overhead_calls += 1
        job.overhead_total += overhead
        job.network_bytes += network
        job.state.phase = ReconfigPhase.PENDING_COMPLETION
        self.engine.after(overhead, EventKind.ReconfigComplete, job.spec.id,
                          target=target, strategy=strategy.value)
        self._check(job)
        return True

    def _on_reconfig_complete(self, ev):
        job = self.jobs[ev.job]
        target = ev.data["target"]
        if target < job.nodes:
            self.cluster.resize(self.cluster.allocation(ev.job), target)
            job.record.size_changes.append((self.engine.now, target))
            self._request_start(self.cluster.drain_time)
        job.nodes = target
        job.state.reconfig_count += 1
        job.record.reconfig_count = job.state.reconfig_count
        job.state.phase = ReconfigPhase.STEADY
        self._check(job)
        self._next_iteration(job)

    def _on_complete(self, ev):
        job = self.jobs[ev.job]
        if job.state.phase is not ReconfigPhase.STEADY:
            raise InvariantViolation(f"job {ev.job} finished with a reconfiguration in flight")
        self.cluster.release(self.cluster.allocation(ev.job))
        job.record.end = self.engine.now
        self._request_start(self.cluster.drain_time)

    # -- driver ------------------------------------------------------------

    def run(self, until: float | None = None) -> SimulationResult:
        self.engine.run(until)
        records = [j.record for j in sorted(self.jobs.values(), key=lambda j: j.spec.id)]
        unfinished = [r.job for r in records if r.end is None]
        if until is None and unfinished:
            raise InvariantViolation(f"{len(unfinished)} jobs never finished (first: {unfinished[0]})")
        if until is None and self.cluster.live_allocations():
            raise InvariantViolation("allocations still live after the event queue drained")
        first = min((j.spec.arrival_time for j in self.jobs.values()), default=0.0)
        last = max((r.end for r in records if r.end is not None), default=first)
        return SimulationResult(self.policy, records, self.cluster.timelines, last - first,
                                self.engine.processed)


def strategy_for(policy: Policy) -> SpawnStrategy:
    return SpawnStrategy.MERGE if policy is Policy.DYNRES_MERGE else SpawnStrategy.BASELINE
