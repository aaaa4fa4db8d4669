"""Run configuration: TOML files, ``key=value`` overrides and validation."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cluster import ClusterConfig
from .malleability import CostParams, SpawnStrategy
from .scheduler import MalleabilityLimits, Policy
from .workload import WorkloadConfig

PACKAGED = Path(__file__).with_name("configs")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


# every accepted key with its default; nesting mirrors the file layout
DEFAULTS: dict[str, Any] = {
    "policy": "dynres-baseline",
    "seed": 0,
    "out_dir": "",
    "cluster": {"node_count": 8, "ranks_per_node": 16, "node_drain": 0.0},
    "malleability": {
        "strategy": "baseline",
        "inhibit_iter": 2,
        "limits": {"lower": 1, "upper": 4, "preferred": 2, "stride": 2},
    },
    "cost": {"spawn_cost": 0.02, "redist_bandwidth": 12.5e9, "redist_latency": 1e-5,
             "base_overhead": 0.5},
    "workload": {
        "job_count": 1000,
        "inter_arrival": 1.0,
        "arrival_jitter": 0.0,
        "iterations": 20,
        "ref_nodes": 4,
        "ref_step_time": 0.7335,
        "scaling_alpha": 0.9,
        "step_times": {},
        "element_size": 8,
        "grid": [1024, 127, 31],
        "trace": "",
    },
}


@dataclass
class RunConfig:
    cluster: ClusterConfig
    workload: WorkloadConfig
    policy: Policy
    cost: CostParams
    seed: int = 0
    out_dir: str = ""
    inhibit_iter: int = 2
    node_drain: float = 0.0
    trace: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def with_policy(self, policy: Policy) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["policy"] = policy.value
        return build(raw)


def _merge(base: dict, extra: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(path, "unknown key")
        if isinstance(base[key], dict) and key != "step_times":
            if not isinstance(value, dict):
                raise ConfigError(path, "expected a section")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = value
    return out


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(raw: dict, assignment: str) -> dict:
    if "=" not in assignment:
        raise ConfigError(assignment, "override must look like key=value")
    key, text = assignment.split("=", 1)
    key = key.strip()
    parts = key.split(".")
    nested: dict = {}
    cur = nested
    for p in parts[:-1]:
        cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = _parse_value(text.strip())
    if parts[0] == "workload" and len(parts) == 3 and parts[1] == "step_times":
        out = copy.deepcopy(raw)
        out["workload"]["step_times"][parts[2]] = cur[parts[-1]]
        return out
    return _merge(raw, nested)


def _get(raw: dict, key: str):
    cur = raw
    for p in key.split("."):
        cur = cur[p]
    return cur


def _typed(raw, key, kind):
    value = _get(raw, key)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(key, f"expected {kind.__name__}, got {value!r}")
    return value


def build(raw: dict) -> RunConfig:
    """Validate a fully merged raw mapping into a :class:`RunConfig`."""
    def sub(key, ctor):
        try:
            return ctor()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, str(exc)) from None

    try:
        policy = Policy.parse(_typed(raw, "policy", str))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("policy", str(exc)) from None
    cluster = sub("cluster", lambda: ClusterConfig(
        _typed(raw, "cluster.node_count", int), _typed(raw, "cluster.ranks_per_node", int)))
    limits = sub("malleability.limits", lambda: MalleabilityLimits(
        *(_typed(raw, f"malleability.limits.{k}", int) for k in ("lower", "upper", "preferred", "stride"))))
    strategy = sub("malleability.strategy",
                   lambda: SpawnStrategy.parse(_typed(raw, "malleability.strategy", str)))
    # the dynres-* policy names carry the spawn strategy and take precedence
    if policy is Policy.DYNRES_MERGE:
        strategy = SpawnStrategy.MERGE
    elif policy is Policy.DYNRES_BASELINE:
        strategy = SpawnStrategy.BASELINE
    cost = sub("cost", lambda: CostParams(
        *(_typed(raw, f"cost.{k}", float) for k in ("spawn_cost", "redist_bandwidth",
                                                    "redist_latency", "base_overhead"))))
    w = "workload"
    steps = _get(raw, "workload.step_times")
    try:
        overrides = {int(k): float(v) for k, v in steps.items()}
    except (TypeError, ValueError, AttributeError):
        raise ConfigError("workload.step_times", "expected a table of nodes -> seconds") from None
    grid = _get(raw, "workload.grid")
    if not (isinstance(grid, list) and len(grid) == 3 and all(isinstance(g, int) for g in grid)):
        raise ConfigError("workload.grid", "expected [n, m, l]")
    workload = sub(w, lambda: WorkloadConfig(
        job_count=_typed(raw, "workload.job_count", int),
        inter_arrival=_typed(raw, "workload.inter_arrival", float),
        seed=_typed(raw, "seed", int),
        arrival_jitter=_typed(raw, "workload.arrival_jitter", float),
        limits=limits,
        iterations=_typed(raw, "workload.iterations", int),
        ref_nodes=_typed(raw, "workload.ref_nodes", int),
        ref_step_time=_typed(raw, "workload.ref_step_time", float),
        scaling_alpha=_typed(raw, "workload.scaling_alpha", float),
        step_time_overrides=overrides,
        strategy=strategy,
        element_size=_typed(raw, "workload.element_size", int),
        grid=tuple(grid),
    ))
    sub("workload.step_times", workload.model)
    inhibit = _typed(raw, "malleability.inhibit_iter", int)
    if inhibit < 1:
        raise ConfigError("malleability.inhibit_iter", "must be >= 1")
    drain = _typed(raw, "cluster.node_drain", float)
    if drain < 0:
        raise ConfigError("cluster.node_drain", "must be non-negative")
    return RunConfig(cluster, workload, policy, cost, _typed(raw, "seed", int),
                     _typed(raw, "out_dir", str), inhibit, drain,
                     _typed(raw, "workload.trace", str), raw)


def load(path: str | os.PathLike | None = None, overrides=()) -> RunConfig:
    """Load ``path`` (or the defaults) and apply ``key=value`` overrides in order."""
    raw = copy.deepcopy(DEFAULTS)
    if path:
        p = resolve_path(path)
        try:
            with open(p, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("--config", f"{path}: {exc}") from None
        raw = _merge(raw, data)
        trace = raw["workload"]["trace"]
        if trace and not os.path.isabs(trace):
            raw["workload"]["trace"] = str(Path(p).parent / trace)
    for item in overrides:
        raw = apply_override(raw, item)
    return build(raw)


def resolve_path(path: str | os.PathLike) -> Path:
    """Accept a file path or the name of a packaged config such as ``replicate-paper``."""
    p = Path(path)
    if p.exists():
        return p
    packaged = PACKAGED / f"{path}.toml"
    if packaged.exists():
        return packaged
    return p


def dumps_fragment(values: dict[str, dict[str, Any]], comment: str = "") -> str:
    """Render ``{"section": {"key": value}}`` as a TOML fragment."""
    lines = [f"# {line}" for line in comment.splitlines()] if comment else []
    for section, items in values.items():
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for k, v in items.items():
            lines.append(f"{k} = {v!r}" if not isinstance(v, str) else f'{k} = "{v}"')
    return "\n".join(lines) + "\n"
