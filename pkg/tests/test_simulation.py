import io
from collections import Counter
from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from malsim.cluster import ClusterConfig
from malsim.malleability import CostParams, SpawnStrategy
from malsim.scheduler import Policy
from malsim.simulation import Simulation
from malsim.workload import WorkloadConfig, generate

STEP4 = 0.7335


def jobs(n, **kw):
    return generate(WorkloadConfig(job_count=n, **kw))


def parse_log(text):
    rows = [line.split("\t") for line in text.splitlines()]
    return [(float(t), kind, job, detail) for t, kind, job, detail in rows]


def run(job_list, policy=Policy.DYNRES_BASELINE, **kw):
    buf = io.StringIO()
    sim = Simulation(job_list, policy=policy, log_file=buf, **kw)
    res = sim.run()
    return sim, res, parse_log(buf.getvalue())


def test_single_job_runs_at_four_nodes():
    _, res, _ = run(jobs(1))
    (r,) = res.records
    assert r.size_changes == [(0.0, 4)]
    assert r.execution == pytest.approx(20 * STEP4, abs=1e-12)
    assert r.waiting == 0.0


def test_static_never_reconfigures():
    sim, res, log = run(jobs(12), Policy.STATIC)
    assert sim.overhead_calls == 0
    assert not [e for e in log if e[1] in ("ReconfigRequest", "ReconfigComplete")]
    assert all(r.size_changes == [(r.start, 4)] for r in res.records)
    assert all(r.execution == pytest.approx(14.67, abs=1e-9) for r in res.records)


def test_shrink_for_waiting_job():
    # two 4-node jobs fill the cluster, the third arrives while they run
    js = [replace(j, arrival_time=0.0) for j in jobs(3)]
    sim, res, log = run(js)
    j0 = res.records[0]
    elems = 1024 * 128 * 32
    overhead = 0.5 + 0.02 * 32 + 1e-5 * (64 * 4) + 4 * elems * 8 / 12.5e9
    assert j0.size_changes[:2] == [(0.0, 4), (pytest.approx(STEP4 + overhead, abs=1e-12), 2)]
    # job 1 hits its first check at the same instant and sees the same queue,
    # so it shrinks too; both hand back 2 nodes together and job 2 takes all 4
    assert res.records[1].size_changes[1] == j0.size_changes[1]
    assert res.records[2].start == pytest.approx(STEP4 + overhead, abs=1e-12)
    assert res.records[2].size_changes[0][1] == 4


def test_resume_at_same_iteration():
    js = [replace(j, arrival_time=0.0) for j in jobs(3)]
    _, res, log = run(js)
    per_job = Counter(e[2] for e in log if e[1] == "IterationComplete")
    assert set(per_job.values()) == {20}
    for job in ("0", "1"):
        iters = [int(e[3].split("=")[1]) for e in log if e[1] == "IterationComplete" and e[2] == job]
        assert iters == list(range(20))


def test_drain_delays_next_start():
    js = [replace(j, arrival_time=0.0) for j in jobs(3)]
    _, res, _ = run(js, Policy.STATIC, node_drain=1.5)
    assert res.records[2].start == pytest.approx(14.67 + 1.5, abs=1e-9)


def test_merge_uses_baseline_first():
    js = [replace(j, arrival_time=0.0, strategy=SpawnStrategy.MERGE) for j in jobs(3)]
    _, _, log = run(js, Policy.DYNRES_MERGE)
    firsts = {}
    for e in log:
        if e[1] == "ReconfigComplete":
            firsts.setdefault(e[2], e[3])
    assert firsts and all("strategy=baseline" in d for d in firsts.values())


def test_rejects_impossible_jobs():
    with pytest.raises(ValueError):
        Simulation(jobs(1), ClusterConfig(node_count=2), Policy.STATIC)
    with pytest.raises(ValueError):
        Simulation(jobs(1) + jobs(1))


workloads = st.builds(
    dict,
    n=st.integers(1, 40),
    inter=st.sampled_from([0.0, 0.3, 1.0, 5.0]),
    jitter=st.sampled_from([0.0, 0.7]),
    seed=st.integers(0, 100),
    nodes=st.sampled_from([4, 5, 8, 12]),
    drain=st.sampled_from([0.0, 0.4, 1.9]),
    inhibit=st.integers(1, 3),
    policy=st.sampled_from(list(Policy)),
    cost=st.sampled_from([1.0, 0.0, 3.0]),
)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(workloads)
def test_invariants_on_random_workloads(w):
    strategy = SpawnStrategy.MERGE if w["policy"] is Policy.DYNRES_MERGE else SpawnStrategy.BASELINE
    js = generate(WorkloadConfig(job_count=w["n"], inter_arrival=w["inter"], arrival_jitter=w["jitter"],
                                 seed=w["seed"], strategy=strategy, iterations=8))
    sim, res, log = run(js, w["policy"], cluster=ClusterConfig(w["nodes"]),
                        node_drain=w["drain"], inhibit_iter=w["inhibit"],
                        cost=CostParams().scaled(w["cost"]))
    completes = Counter(e[2] for e in log if e[1] == "ReconfigComplete")
    for r in res.records:
        sizes = [n for _, n in r.size_changes]
        assert all(s in (1, 2, 4) for s in sizes)
        assert all(b in (2 * a, a // 2) for a, b in zip(sizes, sizes[1:]))
        assert r.reconfig_count == completes.get(str(r.job), 0)
        assert r.completion == r.execution + r.waiting
        assert r.submit <= r.start <= r.end
    # node busy time and per-job node-seconds are two views of the same allocation
    busy = sum(tl.busy_time() for tl in res.timelines)
    assert busy == pytest.approx(sum(r.node_seconds() for r in res.records), rel=1e-9, abs=1e-9)
    if w["policy"] is Policy.STATIC:
        assert sim.overhead_calls == 0
    times = [e[0] for e in log]
    assert times == sorted(times)
    rep = res.report()
    assert all(0.0 <= u <= 1.0 + 1e-12 for u in rep.per_node_utilization)
