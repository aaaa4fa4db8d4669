"""Run a configured simulation, write its outputs, calibrate free parameters."""

from __future__ import annotations

import io
import json
import os
from dataclasses import replace
from pathlib import Path
from typing import Callable

from .config import ConfigError, RunConfig, build
from .metrics import emit_report, write_job_records
from .scheduler import Policy
from .simulation import Simulation, SimulationResult, strategy_for
from .workload import dumps_trace, generate, load_trace, trace_hash

# measured static utilization: four nodes at 89.19 %, four at 87.64 %
REF_STATIC_UTILIZATION = (4 * 89.19 + 4 * 87.64) / 8 / 100.0
REF_DYNAMIC_MEAN_EXEC = 23.52


def load_jobs(cfg: RunConfig):
    jobs = load_trace(cfg.trace, cfg.workload) if cfg.trace else generate(cfg.workload)
    if cfg.policy.malleable:
        strategy = strategy_for(cfg.policy)
        jobs = [j if j.strategy is strategy else replace(j, strategy=strategy) for j in jobs]
    return jobs


def simulate(cfg: RunConfig, log_file=None, jobs=None) -> SimulationResult:
    jobs = load_jobs(cfg) if jobs is None else jobs
    try:
        sim = Simulation(jobs, cfg.cluster, cfg.policy, cfg.cost, inhibit_iter=cfg.inhibit_iter,
                         node_drain=cfg.node_drain, log_file=log_file)
    except ValueError as exc:
        # jobs that cannot fit the configured cluster
        raise ConfigError("cluster.node_count", str(exc)) from None
    return sim.run()


def run_to_dir(cfg: RunConfig, out_dir: str | os.PathLike):
    """Simulate and write events, job records, trace and reports under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = load_jobs(cfg)
    events = io.StringIO()
    result = simulate(cfg, events, jobs)
    (out / "events.tsv").write_text(events.getvalue())
    (out / "trace.csv").write_text(dumps_trace(jobs))
    write_job_records(result.records, out / "jobs.csv")
    report = result.report()
    extra = {
        "workload_hash": trace_hash(jobs),
        "seed": cfg.seed,
        "events": result.events,
        "nodes": cfg.cluster.node_count,
    }
    emit_report(report, "csv", out / "report.csv")
    emit_report(report, "json", out / "report.json", **extra)
    return result, report


def _bisect(f: Callable[[float], float], lo: float, hi: float, target: float,
            tol: float, max_iter: int = 60) -> float:
    """Root of ``f(x) = target`` for monotone ``f`` on ``[lo, hi]``."""
    f_lo, f_hi = f(lo) - target, f(hi) - target
    if f_lo * f_hi > 0:
        raise ValueError(f"target {target} not bracketed: f({lo})={f_lo + target}, f({hi})={f_hi + target}")
    x = lo
    for _ in range(max_iter):
        x = 0.5 * (lo + hi)
        fx = f(x) - target
        if abs(fx) <= tol:
            return x
        if (fx < 0) == (f_lo < 0):
            lo, f_lo = x, fx
        else:
            hi = x
    return x


def _with(cfg: RunConfig, section: str, key: str, value) -> RunConfig:
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in cfg.raw.items()}
    raw[section] = dict(raw[section])
    raw[section][key] = value
    return build(raw)


def calibrate_drain(cfg: RunConfig, target_util: float = REF_STATIC_UTILIZATION,
                    tol: float = 2e-5) -> float:
    """Node drain time at which the static run's mean node utilization hits ``target_util``."""
    static = cfg.with_policy(Policy.STATIC)

    def util(drain):
        return simulate(_with(static, "cluster", "node_drain", drain)).report().mean_utilization

    hi = max(1.0, cfg.workload.ref_step_time * cfg.workload.iterations)
    return _bisect(util, 0.0, hi, target_util, tol)


def calibrate_alpha(cfg: RunConfig, target_exec: float = REF_DYNAMIC_MEAN_EXEC,
                    tol: float = 1e-3, policy: Policy = Policy.DYNRES_BASELINE) -> float:
    """Scaling exponent at which the dynamic mean execution time hits ``target_exec``."""
    dyn = cfg.with_policy(policy)

    def mean_exec(alpha):
        return simulate(_with(dyn, "workload", "scaling_alpha", alpha)).report().mean_exec

    return _bisect(mean_exec, 0.05, 1.0, target_exec, tol)


def calibrate_cost(cfg: RunConfig, target_exec: float = REF_DYNAMIC_MEAN_EXEC,
                   tol: float = 1e-3, policy: Policy = Policy.DYNRES_BASELINE) -> dict:
    """Uniform scale on the cost parameters so the dynamic mean execution hits ``target_exec``."""
    dyn = cfg.with_policy(policy)

    def scaled(k):
        c = dyn.cost.scaled(k)
        raw = dict(dyn.raw)
        raw["cost"] = {"spawn_cost": c.spawn_cost, "redist_bandwidth": c.redist_bandwidth,
                       "redist_latency": c.redist_latency, "base_overhead": c.base_overhead}
        return build(raw)

    k = _bisect(lambda k: simulate(scaled(k)).report().mean_exec, 0.0, 1e3, target_exec, tol)
    return dict(scaled(k).raw["cost"])


def load_run_report(run_dir: str | os.PathLike) -> dict:
    path = Path(run_dir) / "report.json"
    with open(path) as fh:
        body = json.load(fh)
    entry = body["reports"][0]
    entry["workload_hash"] = body.get("workload_hash")
    return entry

