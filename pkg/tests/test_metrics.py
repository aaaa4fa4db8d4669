import json

import pytest
from hypothesis import given, strategies as st

from malsim.cluster import NodeTimeline
from malsim.metrics import (
    JobRecord,
    MetricsError,
    WorkloadReport,
    emit_report,
    read_report_csv,
    report_from_dict,
    speedups,
    summarize,
    write_plot_data,
)


def rec(job, submit, start, end):
    r = JobRecord(job, submit, start, end)
    r.size_changes = [(start, 1)]
    return r


def test_reference_static_identity():
    r = JobRecord(0, 0.0, 3356.32, 3356.32 + 14.67)
    rep = summarize([r], [r.end], r.end)
    assert rep.mean_exec + rep.mean_wait == rep.mean_completion
    assert rep.mean_completion == pytest.approx(3370.99, abs=1e-9)


def test_single_job_full_utilization():
    tl = NodeTimeline([(0.0, 10.0)])
    rep = summarize([rec(0, 0.0, 0.0, 10.0)], [tl], 10.0)
    assert rep.per_node_utilization == [1.0]


def test_mean_wait():
    rep = summarize([rec(0, 0.0, 0.0, 5.0), rec(1, 0.0, 4.0, 9.0)], [9.0], 9.0)
    assert rep.mean_wait == 2.0


def test_open_records_rejected():
    with pytest.raises(MetricsError):
        summarize([JobRecord(0, 0.0, 1.0)], [], 1.0)
    with pytest.raises(MetricsError):
        summarize([JobRecord(0, 2.0, 1.0, 3.0)], [], 3.0)
    with pytest.raises(MetricsError):
        summarize([rec(0, 0.0, 0.0, 1.0)], [NodeTimeline(open_since=0.0)], 1.0)


@given(st.lists(st.tuples(st.floats(0, 1e4), st.floats(0, 1e4), st.floats(0, 1e3)), min_size=1, max_size=50))
def test_completion_identity_exact(triples):
    recs = [JobRecord(i, s, s + w, s + w + e) for i, (s, w, e) in enumerate(triples)]
    for r in recs:
        assert r.completion == r.execution + r.waiting
    rep = summarize(recs, [1.0], 1.0)
    assert rep.mean_completion == rep.mean_exec + rep.mean_wait


def sample_reports():
    s = WorkloadReport("static", 100.0, 14.67, 50.0, 64.67, [0.9] * 8)
    d = WorkloadReport("dynres-baseline", 80.0, 20.0, 30.0, 50.0, [0.95] * 8)
    return [s, d]


def test_speedups():
    s, d = sample_reports()
    assert speedups([s]) == [1.0]
    assert speedups([s, d]) == [1.0, 1.25]
    assert speedups([d]) == [None]


def test_csv_schema_and_json_agree(tmp_path):
    reps = sample_reports()
    emit_report(reps, "csv", tmp_path / "r.csv")
    emit_report(reps, "json", tmp_path / "r.json", workload_hash="abc")
    lines = (tmp_path / "r.csv").read_text().split("\n\n")
    assert len(lines[0].splitlines()) == 3
    assert len(lines[1].splitlines()) == 1 + 8
    back_csv = read_report_csv(tmp_path / "r.csv")
    body = json.loads((tmp_path / "r.json").read_text())
    back_json = [report_from_dict(d) for d in body["reports"]]
    for a, b in zip(back_csv, back_json):
        assert (a.makespan, a.mean_exec, a.mean_wait, a.mean_completion) == \
               (b.makespan, b.mean_exec, b.mean_wait, b.mean_completion)
        assert a.per_node_utilization == pytest.approx(b.per_node_utilization, rel=1e-15)
    assert body["workload_hash"] == "abc"
    assert body["reports"][0]["speedup_vs_static"] == 1.0


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report(sample_reports(), "xml", tmp_path / "x")


def test_plot_data(tmp_path):
    write_plot_data(sample_reports(), tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().splitlines() == [
        "policy,makespan_s", "static,100.0", "dynres-baseline,80.0"]


def test_node_seconds():
    r = JobRecord(0, 0.0, 0.0, 10.0, [(0.0, 4), (2.0, 2)])
    assert r.node_seconds() == 4 * 2 + 2 * 8
