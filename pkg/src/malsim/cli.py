"""Command line entry point: run, report, validate-kernel, calibrate."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import config as cfgmod
from . import runner
from .cluster import AllocationError
from .engine import SimulationError
from .metrics import MetricsError, emit_report, report_from_dict, write_plot_data
from .scheduler import Policy
from .workload import TraceError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("malsim")


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"malsim: {msg}", file=sys.stderr)


def _out_dir(arg: str | None, cfg_value: str = "", default: str = "malsim-out") -> Path:
    return Path(arg or cfg_value or os.environ.get("MALSIM_OUT") or default)


def _load_config(args) -> cfgmod.RunConfig:
    overrides = list(args.set or [])
    if args.policy and args.policy != "all":
        overrides.append(f'policy="{args.policy}"')
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return cfgmod.load(args.config, overrides)


# -- run -------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args.out, cfg.out_dir)
    policies = list(Policy) if args.policy == "all" else [cfg.policy]
    dirs = []
    for policy in policies:
        run_cfg = cfg.with_policy(policy) if args.policy == "all" else cfg
        target = out / policy.value if args.policy == "all" else out
        t0 = time.perf_counter()
        _, report = runner.run_to_dir(run_cfg, target)
        dirs.append(target)
        print(f"{policy.value}: makespan={report.makespan:.2f}s mean_exec={report.mean_exec:.3f}s "
              f"mean_wait={report.mean_wait:.2f}s util={100 * report.mean_utilization:.2f}% "
              f"({time.perf_counter() - t0:.1f}s) -> {target}")
    if len(dirs) > 1:
        return _compare(dirs, out)
    return EXIT_OK


# -- report ----------------------------------------------------------------

def _compare(run_dirs, out: Path) -> int:
    entries = []
    for d in run_dirs:
        try:
            entries.append(runner.load_run_report(d))
        except FileNotFoundError:
            raise UsageError(f"no report.json in {d}") from None
        except (KeyError, IndexError, json.JSONDecodeError) as exc:
            raise UsageError(f"unreadable report in {d}: {exc}") from None
    hashes = {e.get("workload_hash") for e in entries}
    if len(hashes) > 1:
        _err("warning: runs were made on different workloads (workload_hash differs)")
    reports = [report_from_dict(e) for e in entries]
    out.mkdir(parents=True, exist_ok=True)
    emit_report(reports, "csv", out / "comparison.csv")
    emit_report(reports, "json", out / "comparison.json",
                runs=[str(d) for d in run_dirs])
    write_plot_data(reports, out / "plotdata.csv")
    print((out / "comparison.csv").read_text().split("\n\n")[0])
    return EXIT_OK


def cmd_report(args) -> int:
    return _compare([Path(d) for d in args.run_dirs], _out_dir(args.out, default="."))


# -- validate-kernel -------------------------------------------------------

def _parse_schedule(text: str):
    """``"10:32>64,15:64>32"`` -> [(10, 32, 64), (15, 64, 32)]"""
    entries = []
    for part in text.split(","):
        try:
            it, change = part.split(":")
            np_old, nt_new = change.split(">")
            entries.append((int(it), int(np_old), int(nt_new)))
        except ValueError:
            raise UsageError(f"bad schedule entry {part!r}, expected ITER:NP>NT") from None
    return entries


def _off_by_one(plan):
    from .redistribution import Message, TransferPlan

    msgs = list(plan.messages)
    i = max(range(len(msgs)), key=lambda k: msgs[k].length)
    m = msgs[i]
    msgs[i] = Message(m.src, m.dst, m.offset, m.length - 1)
    return TransferPlan(plan.np_old, plan.nt_new, plan.total_len, tuple(msgs))


def cmd_validate_kernel(args) -> int:
    from . import kernel
    from .kernel.advection import ScheduleError

    try:
        dims = kernel.GridDims.full() if args.full_scale else kernel.GridDims.parse(args.dims)
        ranks = [int(r) for r in args.ranks.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    schedules = [_parse_schedule(s) for s in (args.schedule or ["10:32>64", "5:32>16,12:16>32"])]
    hook = _off_by_one if args.inject_off_by_one else None
    common = dict(seed=args.seed, velocity=args.velocity, backend=args.backend)
    cases = [(f"ranks={r}", dict(ranks=r)) for r in ranks]
    cases += [("schedule=" + ",".join(f"{i}:{a}>{b}" for i, a, b in s), dict(schedule=s, plan_hook=hook))
              for s in schedules]
    try:
        ref = kernel.run_with_reconfig(dims, args.steps, ranks=1, **common)
        results = [(name, kernel.run_with_reconfig(dims, args.steps, **kw, **common))
                   for name, kw in cases]
    except (ScheduleError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    print(f"grid {dims} steps={args.steps} backend={args.backend or kernel.BACKEND}")
    print(f"reference checksum {kernel.checksum(ref)}")
    failed = 0
    for name, psi in results:
        where = kernel.first_difference(ref, psi)
        status = "ok" if where is None else f"MISMATCH at cell {where}"
        failed += where is not None
        print(f"  {name:<28} {kernel.checksum(psi)[:16]}  {status}")
    return EXIT_VERIFY if failed else EXIT_OK


# -- calibrate -------------------------------------------------------------

def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args.out, cfg.out_dir)
    fits = ["drain", "alpha"] if args.fit == "all" else [args.fit]
    values: dict[str, dict] = {}
    notes = []
    try:
        for fit in fits:
            last = fit == fits[-1]
            if fit == "drain":
                target = args.target if (last and args.target is not None) else runner.REF_STATIC_UTILIZATION
                drain = round(runner.calibrate_drain(cfg, target), 4)
                values.setdefault("cluster", {})["node_drain"] = drain
                cfg = runner._with(cfg, "cluster", "node_drain", drain)
                notes.append(f"node_drain: static mean utilization -> {target:.5f}")
            elif fit == "alpha":
                target = args.target if args.target is not None else runner.REF_DYNAMIC_MEAN_EXEC
                alpha = round(runner.calibrate_alpha(cfg, target), 4)
                values.setdefault("workload", {})["scaling_alpha"] = alpha
                cfg = runner._with(cfg, "workload", "scaling_alpha", alpha)
                notes.append(f"scaling_alpha: dynamic mean exec -> {target} s")
            else:
                target = args.target if args.target is not None else runner.REF_DYNAMIC_MEAN_EXEC
                values["cost"] = runner.calibrate_cost(cfg, target)
                notes.append(f"cost scale: dynamic mean exec -> {target} s")
    except ValueError as exc:
        _err(f"calibration failed: {exc}")
        return EXIT_VERIFY
    text = cfgmod.dumps_fragment(values, "malsim calibrate\n" + "\n".join(notes))
    out.mkdir(parents=True, exist_ok=True)
    (out / "calibration.toml").write_text(text)
    print(text, end="")
    return EXIT_OK


# -- plumbing --------------------------------------------------------------

def _config_flags(p):
    p.add_argument("--config", help="TOML file or packaged config name (e.g. replicate-paper)")
    p.add_argument("--policy", help="static, dynres-baseline, dynres-merge")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: config out_dir, $MALSIM_OUT, ./malsim-out)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="malsim", description="Malleable-job cluster simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one policy (or 'all') and write its outputs")
    _config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="compare finished runs")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate-kernel", help="check advection results across decompositions")
    p.add_argument("--dims", default="64x16x8")
    p.add_argument("--full-scale", action="store_true", help="use the 1024x128x32 grid")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ranks", default="1,4,16,32")
    p.add_argument("--schedule", action="append", metavar="ITER:NP>NT[,...]")
    p.add_argument("--velocity", choices=["constant", "shear"], default="constant")
    p.add_argument("--backend", choices=["native", "python"])
    p.add_argument("--inject-off-by-one", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate_kernel)

    p = sub.add_parser("calibrate", help="fit free model parameters to reference values")
    _config_flags(p)
    p.add_argument("--fit", choices=["drain", "alpha", "cost", "all"], default="all")
    p.add_argument("--target", type=float, help="target for the last fitted quantity")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (cfgmod.ConfigError, TraceError, UsageError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    except (SimulationError, AllocationError, MetricsError) as exc:
        _err(f"invariant violation: {exc}")
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
