"""Exit criteria, one PASS/FAIL line each (listed again in the terminal summary)."""

import itertools
import math
import time
from collections import Counter

import numpy as np
import pytest

from conftest import record_criterion
from oracles import policy_reference, plan_from_owners

from malsim import kernel
from malsim.malleability import SpawnStrategy, spawn_count
from malsim.metrics import JobRecord, summarize
from malsim.redistribution import apply_plan, compute_plan, gather, split
from malsim.runner import REF_DYNAMIC_MEAN_EXEC, run_to_dir
from malsim.scheduler import MalleabilityLimits, Policy, decide_reconfiguration

pytestmark = pytest.mark.acceptance

DYN = (Policy.DYNRES_BASELINE, Policy.DYNRES_MERGE)


def check(name, ok, detail):
    record_criterion(name, bool(ok), detail)
    assert ok, f"{name}: {detail}"


def test_1_policy_oracle():
    lim = MalleabilityLimits(1, 4, 2, 2)
    t0 = time.perf_counter()
    cases = mismatches = 0
    for cur, pending, avail, head in itertools.product((1, 2, 4), (True, False), range(9), (1, 2, 4, None)):
        d = decide_reconfiguration(cur, lim, pending, avail, head)
        cases += 1
        mismatches += (d.verdict.value, d.target) != policy_reference(cur, 1, 4, 2, pending, avail, head)
    dt = time.perf_counter() - t0
    check("1 reconfiguration policy oracle equivalence", mismatches == 0 and dt < 1.0,
          f"{cases} cases, {mismatches} mismatches, {dt:.3f}s (limit 1s)")


def test_2_spawn_arithmetic():
    bad = 0
    for np_, nt in itertools.product(range(1, 257), repeat=2):
        b = spawn_count(SpawnStrategy.BASELINE, np_, nt)
        m = spawn_count(SpawnStrategy.MERGE, np_, nt)
        bad += not (b == nt and m == max(0, nt - np_) and m < b)
    check("2 spawn arithmetic", bad == 0, f"256x256 (NP,NT) pairs, {bad} violations")


def test_3_redistribution_soundness():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    failures = 0
    for _ in range(1000):
        np_, nt = (int(v) for v in rng.integers(1, 129, size=2))
        length = int(rng.integers(0, 4097))
        plan = compute_plan(np_, nt, length)
        got = {(m.src, m.dst, m.offset, m.offset + m.length) for m in plan.messages}
        covered = np.zeros(length, dtype=np.int64)
        for m in plan.messages:
            covered[m.offset:m.offset + m.length] += 1
        data = rng.standard_normal(length)
        there = apply_plan(plan, split(data, np_))
        back = apply_plan(compute_plan(nt, np_, length), there)
        ok = (got == plan_from_owners(np_, nt, length)
              and bool(np.all(covered == 1))
              and sum(m.length for m in plan.messages) == length
              and gather(there).tobytes() == data.tobytes()
              and gather(back).tobytes() == data.tobytes())
        failures += not ok
    dt = time.perf_counter() - t0
    check("3 redistribution soundness", failures == 0 and dt < 10.0,
          f"1000 random (NP,NT,L), {failures} failures, {dt:.2f}s (limit 10s)")


def test_4_kernel_independence():
    dims = kernel.GridDims.parse("64x16x8")
    t0 = time.perf_counter()
    ref = kernel.run_with_reconfig(dims, 20, ranks=1)
    runs = {f"ranks={r}": kernel.run_with_reconfig(dims, 20, ranks=r) for r in (1, 4, 16, 32)}
    runs["10:32>64"] = kernel.run_with_reconfig(dims, 20, [(10, 32, 64)])
    runs["5:32>16,12:16>32"] = kernel.run_with_reconfig(dims, 20, [(5, 32, 16), (12, 16, 32)])
    dt = time.perf_counter() - t0
    diffs = {k: kernel.first_difference(ref, v) for k, v in runs.items()}
    bad = {k: v for k, v in diffs.items() if v is not None}
    check("4 kernel decomposition/reconfiguration independence", not bad and dt < 30.0,
          f"{len(runs)} runs bitwise equal to 1-rank reference on 64x16x8 ({kernel.BACKEND}), "
          f"{dt:.2f}s (limit 30s){'; mismatches ' + str(bad) if bad else ''}")


def test_5_conservation():
    dims = kernel.GridDims.parse("64x16x8")
    worst = 0.0
    for velocity in ("constant", "shear"):
        x0 = kernel.init_domain(dims, 0, velocity=velocity).x
        x1 = kernel.run_with_reconfig(dims, 20, ranks=4, velocity=velocity)
        m0, m1 = math.fsum(x0.ravel()), math.fsum(x1.ravel())
        worst = max(worst, abs(m1 - m0) / abs(m0))
    check("5 conservation", worst <= 1e-12, f"max relative drift {worst:.2e} after 20 steps (limit 1e-12)")


def test_6_calibration(replica_reports):
    s = replica_reports[Policy.STATIC][1]
    d = replica_reports[Policy.DYNRES_BASELINE][1]
    err = abs(d.mean_exec - REF_DYNAMIC_MEAN_EXEC) / REF_DYNAMIC_MEAN_EXEC
    check("6 calibration", abs(s.mean_exec - 14.67) <= 1e-6 and err <= 0.01,
          f"static mean_exec {s.mean_exec:.9f}s (14.67 +/- 1e-6), "
          f"dynres-baseline mean_exec {d.mean_exec:.3f}s (23.52 +/- 1%)")


def test_6a_makespan(replica_reports):
    s = replica_reports[Policy.STATIC][1]
    ratios = {p.value: replica_reports[p][1].makespan / s.makespan for p in DYN}
    ok = all(r <= 0.85 for r in ratios.values())
    in_band = all(0.70 <= r <= 0.80 for r in ratios.values())
    check("6a makespan", ok, f"dynamic/static = {', '.join(f'{k} {v:.4f}' for k, v in ratios.items())} "
          f"(<= 0.85; target band 0.70-0.80 {'met' if in_band else 'missed'})")


def test_6b_waiting(replica_reports):
    s = replica_reports[Policy.STATIC][1]
    ratios = {p.value: replica_reports[p][1].mean_wait / s.mean_wait for p in DYN}
    ok = all(0.65 <= r <= 0.85 for r in ratios.values())
    check("6b waiting time", ok, f"dynamic/static mean wait = "
          f"{', '.join(f'{k} {v:.4f}' for k, v in ratios.items())} (0.65-0.85)")


def test_6c_utilization(replica_reports):
    s = replica_reports[Policy.STATIC][1]
    parts, ok = [], True
    for p in DYN:
        d = replica_reports[p][1]
        per_node = [a - b for a, b in zip(d.per_node_utilization, s.per_node_utilization)]
        uplift = 100 * (d.mean_utilization - s.mean_utilization)
        ok &= min(per_node) >= 0 and 2.0 <= uplift <= 6.0
        parts.append(f"{p.value} mean +{uplift:.2f}pp, min node +{100 * min(per_node):.2f}pp")
    check("6c utilization", ok, "; ".join(parts) + f" (static mean {100 * s.mean_utilization:.2f}%; every node >= static, mean +2..+6pp)")


def test_6d_baseline_vs_merge(replica_reports):
    b = replica_reports[Policy.DYNRES_BASELINE]
    m = replica_reports[Policy.DYNRES_MERGE]
    gap = abs(b[1].makespan - m[1].makespan) / b[1].makespan
    hist = Counter()
    for r in b[0].records + m[0].records:
        hist[r.reconfig_count] += 1
    mode = hist.most_common(1)[0][0]
    check("6d baseline vs merge", gap <= 0.02,
          f"makespan gap {100 * gap:.3f}% (limit 2%); reconfigurations per job {dict(sorted(hist.items()))}, "
          f"max {max(hist)}, mode {mode} (report only: expected max <= 2, mode <= 1)")


def test_6_runtime(replica_reports):
    times = {p.value: replica_reports[p][2] for p in Policy}
    check("6 runtime", all(t < 60 for t in times.values()),
          ", ".join(f"{k} {v:.2f}s" for k, v in times.items()) + " (limit 60s per policy)")


def test_7_completion_identity(replica_reports):
    bad = sum(r.completion != r.execution + r.waiting
              for result, _, _ in replica_reports.values() for r in result.records)
    means_ok = all(rep.mean_completion == rep.mean_exec + rep.mean_wait for _, rep, _ in replica_reports.values())
    ref = JobRecord(0, 0.0, 3356.32, 3356.32 + 14.67)
    rep = summarize([ref], [ref.end], ref.end)
    table_ok = round(rep.mean_exec, 2) == 14.67 and round(rep.mean_wait, 2) == 3356.32 \
        and round(rep.mean_completion, 2) == 3370.99
    check("7 completion identity", bad == 0 and means_ok and table_ok,
          f"{bad} jobs violate completion = exec + wait; reference row 14.67 + 3356.32 -> {rep.mean_completion:.2f}")


def test_8_determinism(replica_cfg, tmp_path):
    differing = []
    for p in Policy:
        cfg = replica_cfg.with_policy(p)
        run_to_dir(cfg, tmp_path / p.value / "a")
        run_to_dir(cfg, tmp_path / p.value / "b")
        for f in sorted((tmp_path / p.value / "a").iterdir()):
            if f.read_bytes() != (tmp_path / p.value / "b" / f.name).read_bytes():
                differing.append(f"{p.value}/{f.name}")
    check("8 determinism", not differing,
          "two runs per policy byte-identical (events, trace, jobs, reports)"
          + (f"; differs: {differing}" if differing else ""))
