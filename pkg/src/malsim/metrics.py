"""Per-job and per-node statistics, report files and cross-policy comparison."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

SUMMARY_COLUMNS = ["policy", "makespan_s", "mean_exec_s", "mean_wait_s", "mean_completion_s",
                   "speedup_vs_static"]
NODE_COLUMNS = ["node_id", "utilization_pct"]
JOB_COLUMNS = ["id", "submit_s", "start_s", "end_s", "exec_s", "wait_s", "completion_s",
               "start_nodes", "final_nodes", "reconfig_count", "size_changes"]


class MetricsError(ValueError):
    pass


@dataclass
class JobRecord:
    job: int
    submit: float
    start: float | None = None
    end: float | None = None
    size_changes: list[tuple[float, int]] = field(default_factory=list)
    reconfig_count: int = 0

    @property
    def closed(self) -> bool:
        return self.start is not None and self.end is not None

    @property
    def execution(self) -> float:
        return self.end - self.start

    @property
    def waiting(self) -> float:
        return self.start - self.submit

    @property
    def completion(self) -> float:
        # defined as the sum so that completion == execution + waiting holds exactly
        return self.execution + self.waiting

    def node_seconds(self) -> float:
        total = 0.0
        for (t0, n), (t1, _) in zip(self.size_changes, self.size_changes[1:] + [(self.end, 0)]):
            total += n * (t1 - t0)
        return total


@dataclass
class WorkloadReport:
    policy: str
    makespan: float
    mean_exec: float
    mean_wait: float
    mean_completion: float
    per_node_utilization: list[float]
    job_count: int = 0
    reconfig_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def mean_utilization(self) -> float:
        return math.fsum(self.per_node_utilization) / len(self.per_node_utilization)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def _busy(timeline) -> float:
    if isinstance(timeline, (int, float)):
        return float(timeline)
    if getattr(timeline, "open_since", None) is not None:
        raise MetricsError("node timeline still has an open interval")
    return timeline.busy_time()


def summarize(records: Sequence[JobRecord], timelines, makespan: float, policy: str = "") -> WorkloadReport:
    """Aggregate closed job records and node timelines.

    ``timelines`` may hold NodeTimeline objects or plain busy seconds.
    Utilization is busy time over the workload makespan.
    """
    for r in records:
        if not r.closed:
            raise MetricsError(f"job {r.job} has no end time")
        if not r.submit <= r.start <= r.end:
            raise MetricsError(f"job {r.job} has submit/start/end out of order")
    if makespan <= 0 and records:
        raise MetricsError("makespan must be positive")
    mean_exec = _mean([r.execution for r in records])
    mean_wait = _mean([r.waiting for r in records])
    util = [_busy(t) / makespan if makespan > 0 else 0.0 for t in timelines]
    hist: dict[int, int] = {}
    for r in records:
        hist[r.reconfig_count] = hist.get(r.reconfig_count, 0) + 1
    return WorkloadReport(policy, makespan, mean_exec, mean_wait, mean_exec + mean_wait, util,
                          len(records), dict(sorted(hist.items())))


def speedups(reports: Sequence[WorkloadReport]) -> list[float | None]:
    static = next((r for r in reports if r.policy == "static"), None)
    if static is None:
        return [None] * len(reports)
    return [static.makespan / r.makespan for r in reports]


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def _summary_row(report: WorkloadReport, speedup) -> list[str]:
    return [report.policy, _num(report.makespan), _num(report.mean_exec), _num(report.mean_wait),
            _num(report.mean_completion), _num(speedup)]


def report_dict(report: WorkloadReport, speedup=None, **extra) -> dict:
    out = {
        "policy": report.policy,
        "makespan_s": report.makespan,
        "mean_exec_s": report.mean_exec,
        "mean_wait_s": report.mean_wait,
        "mean_completion_s": report.mean_completion,
        "speedup_vs_static": speedup,
        "utilization_pct": [100.0 * u for u in report.per_node_utilization],
        "job_count": report.job_count,
        "reconfig_histogram": {str(k): v for k, v in report.reconfig_histogram.items()},
    }
    out.update(extra)
    return out


def emit_report(reports, fmt: str, path: str | os.PathLike, **extra) -> None:
    """Write one or more reports as ``csv`` or ``json``.

    CSV holds a summary block (one row per report) followed by one
    ``node_id,utilization_pct`` block per report, blocks separated by blank
    lines. The speedup column is filled when a static report is present.
    """
    if isinstance(reports, WorkloadReport):
        reports = [reports]
    ups = speedups(reports)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_COLUMNS)
            for r, s in zip(reports, ups):
                w.writerow(_summary_row(r, s))
            for r in reports:
                fh.write("\n")
                w.writerow(NODE_COLUMNS)
                for node, u in enumerate(r.per_node_utilization):
                    w.writerow([node, _num(100.0 * u)])
    elif fmt == "json":
        body = {"reports": [report_dict(r, s) for r, s in zip(reports, ups)]}
        body.update(extra)
        with open(path, "w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def read_report_csv(path: str | os.PathLike) -> list[WorkloadReport]:
    with open(path, newline="") as fh:
        blocks, cur = [], []
        for row in csv.reader(fh):
            if not row:
                if cur:
                    blocks.append(cur)
                cur = []
            else:
                cur.append(row)
        if cur:
            blocks.append(cur)
    if not blocks or blocks[0][0] != SUMMARY_COLUMNS:
        raise MetricsError(f"{path}: missing summary header")
    summary = blocks[0][1:]
    nodes = blocks[1:]
    if len(nodes) != len(summary):
        raise MetricsError(f"{path}: {len(summary)} summary rows but {len(nodes)} node blocks")
    out = []
    for row, block in zip(summary, nodes):
        util = [float(u) / 100.0 for _, u in block[1:]]
        out.append(WorkloadReport(row[0], float(row[1]), float(row[2]), float(row[3]),
                                  float(row[4]), util))
    return out


def report_from_dict(d: dict) -> WorkloadReport:
    return WorkloadReport(
        d["policy"], d["makespan_s"], d["mean_exec_s"], d["mean_wait_s"], d["mean_completion_s"],
        [u / 100.0 for u in d["utilization_pct"]], d.get("job_count", 0),
        {int(k): v for k, v in d.get("reconfig_histogram", {}).items()},
    )


def write_plot_data(reports: Sequence[WorkloadReport], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "makespan_s"])
        for r in reports:
            w.writerow([r.policy, _num(r.makespan)])


def write_job_records(records: Sequence[JobRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(JOB_COLUMNS)
        for r in records:
            changes = ";".join(f"{t!r}:{n}" for t, n in r.size_changes)
            w.writerow([r.job, _num(r.submit), _num(r.start), _num(r.end), _num(r.execution),
                        _num(r.waiting), _num(r.completion), r.size_changes[0][1],
                        r.size_changes[-1][1], r.reconfig_count, changes])
