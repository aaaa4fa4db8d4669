"""3D donor-cell advection over virtual ranks.

The field is cut into slabs along axis 0. Each slab carries ``halo`` ghost
planes per side, refreshed by :func:`halo_exchange` (periodic). Every cell's
update reads the same operands in the same order whatever the decomposition,
so a run is bitwise reproducible across rank counts and across mid-run
redistributions.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .. import redistribution as rd

FIELDS = ("x", "u1", "u2", "u3")


class CourantError(ValueError):
    pass


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class GridDims:
    n_global: int = 64
    m: int = 15
    l: int = 7
    halo: int = 1

    @classmethod
    def desk(cls) -> "GridDims":
        return cls(64, 15, 7)

    @classmethod
    def full(cls) -> "GridDims":
        return cls(1024, 127, 31)

    @classmethod
    def parse(cls, text: str, halo: int = 1) -> "GridDims":
        """Parse ``"64x16x8"`` (cell counts per axis)."""
        try:
            n, a, b = (int(p) for p in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"bad dims {text!r}, expected NxMxL") from None
        return cls(n, a - 1, b - 1, halo)

    @property
    def plane_shape(self) -> tuple[int, int]:
        return (self.m + 1, self.l + 1)

    @property
    def plane_size(self) -> int:
        return (self.m + 1) * (self.l + 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_global,) + self.plane_shape

    @property
    def cells(self) -> int:
        return self.n_global * self.plane_size

    def check_ranks(self, ranks: int) -> None:
        # each slab must own at least as many planes as it lends out as halo
        if ranks < 1 or self.n_global < ranks * self.halo:
            raise ScheduleError(
                f"{ranks} ranks cannot split {self.n_global} planes with halo {self.halo}"
            )

    def __str__(self):
        return "x".join(map(str, self.shape))


@dataclass
class AdvectionState:
    dims: GridDims
    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    dt: float = 1.0
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    iteration: int = 0

    def courant_scale(self) -> tuple[float, float, float]:
        return tuple(self.dt / h for h in self.spacing)


def _velocities(dims: GridDims, kind: str, speeds):
    n, a, b = dims.shape
    s1, s2, s3 = speeds
    if kind == "constant":
        return (np.full(dims.shape, s1), np.full(dims.shape, s2), np.full(dims.shape, s3))
    if kind == "shear":
        # each component is constant along its own axis, so the discrete divergence is zero
        j = np.arange(a).reshape(1, a, 1)
        k = np.arange(b).reshape(1, 1, b)
        i = np.arange(n).reshape(n, 1, 1)
        u1 = np.broadcast_to(s1 + 0.05 * np.sin(2 * np.pi * j / a) + 0 * k, dims.shape)
        u2 = np.broadcast_to(s2 + 0.05 * np.cos(2 * np.pi * k / b) + 0 * i, dims.shape)
        u3 = np.broadcast_to(s3 + 0.05 * np.sin(2 * np.pi * i / n) + 0 * j, dims.shape)
        return tuple(np.ascontiguousarray(u, dtype=np.float64) for u in (u1, u2, u3))
    raise ValueError(f"unknown velocity profile {kind!r}")


def init_domain(
    dims: GridDims,
    seed: int = 0,
    *,
    velocity: str = "constant",
    speeds=(0.3, -0.25, 0.2),
    dt: float = 1.0,
    spacing=(1.0, 1.0, 1.0),
) -> AdvectionState:
    rng = np.random.default_rng(seed)
    x = rng.random(dims.shape)
    u1, u2, u3 = _velocities(dims, velocity, speeds)
    state = AdvectionState(dims, x, u1, u2, u3, float(dt), tuple(map(float, spacing)))
    for axis, (u, c) in enumerate(zip((u1, u2, u3), state.courant_scale()), start=1):
        worst = float(np.max(np.abs(u))) * c
        if worst > 1.0:
            raise CourantError(f"Courant number {worst:.3g} > 1 on axis {axis}")
    return state


@dataclass
class FieldShard:
    rank: int
    lo: int
    hi: int
    halo: int
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n_local(self) -> int:
        return self.hi - self.lo

    def interior(self, name: str) -> np.ndarray:
        return self.arrays[name][self.halo:self.halo + self.n_local]


@dataclass
class DistributedState:
    dims: GridDims
    shards: list[FieldShard]
    courant: tuple[float, float, float]
    iteration: int = 0

    @property
    def ranks(self) -> int:
        return len(self.shards)

    def gather(self, name: str = "x") -> np.ndarray:
        return np.concatenate([s.interior(name) for s in self.shards], axis=0)


def _build_shards(dims: GridDims, interiors: dict[str, Sequence[np.ndarray]], ranks: int):
    h = dims.halo
    shards = []
    for r in range(ranks):
        lo, hi = rd.block_range(r, ranks, dims.n_global)
        arrays = {}
        for name in FIELDS:
            buf = np.empty((hi - lo + 2 * h,) + dims.plane_shape)
            buf[h:h + hi - lo] = interiors[name][r]
            arrays[name] = buf
        shards.append(FieldShard(r, lo, hi, h, arrays))
    return halo_exchange(shards)


def scatter(state: AdvectionState, ranks: int) -> DistributedState:
    state.dims.check_ranks(ranks)
    interiors = {name: rd.split(getattr(state, name), ranks) for name in FIELDS}
    shards = _build_shards(state.dims, interiors, ranks)
    return DistributedState(state.dims, shards, state.courant_scale(), state.iteration)


def halo_exchange(shards: list[FieldShard]) -> list[FieldShard]:
    """Copy neighbouring edge planes into every shard's ghost planes (periodic)."""
    p = len(shards)
    for r, shard in enumerate(shards):
        h, n = shard.halo, shard.n_local
        below, above = shards[(r - 1) % p], shards[(r + 1) % p]
        for name, buf in shard.arrays.items():
            src_lo = below.arrays[name]
            src_hi = above.arrays[name]
            buf[:h] = src_lo[below.n_local:below.n_local + h]
            buf[h + n:] = src_hi[h:2 * h]
    return shards


def advection_step(state: DistributedState, backend=None) -> DistributedState:
    if backend is None or isinstance(backend, str):
        from . import get_backend

        backend = get_backend(backend)
    c1, c2, c3 = state.courant
    updated = [
        backend.donor_cell_interior(
            s.arrays["x"], s.arrays["u1"], s.arrays["u2"], s.arrays["u3"], c1, c2, c3, s.halo
        )
        for s in state.shards
    ]
    for s, new in zip(state.shards, updated):
        s.arrays["x"][s.halo:s.halo + s.n_local] = new
    halo_exchange(state.shards)
    state.iteration += 1
    return state


def redistribute(
    state: DistributedState,
    nt_new: int,
    plan_hook: Callable[[rd.TransferPlan], rd.TransferPlan] | None = None,
) -> DistributedState:
    """Move every field from the current rank count to ``nt_new`` ranks.

    Ghost planes are not transferred; they are rebuilt by a halo exchange.
    """
    dims = state.dims
    dims.check_ranks(nt_new)
    plan = rd.compute_plan(state.ranks, nt_new, dims.n_global)
    if plan_hook is not None:
        plan = plan_hook(plan)
    interiors = {
        name: rd.apply_plan(plan, [s.interior(name) for s in state.shards]) for name in FIELDS
    }
    shards = _build_shards(dims, interiors, nt_new)
    return replace(state, shards=shards)


def _validate_schedule(dims: GridDims, steps: int, schedule, ranks: int) -> int:
    if steps < 0:
        raise ScheduleError("steps must be >= 0")
    prev_iter = 0
    current = schedule[0][1] if schedule else ranks
    dims.check_ranks(current)
    for it, np_old, nt_new in schedule:
        if not 1 <= it < steps:
            raise ScheduleError(f"reconfiguration at iteration {it} outside [1, {steps})")
        if it <= prev_iter:
            raise ScheduleError("reconfiguration iterations must be strictly increasing")
        if np_old != current:
            raise ScheduleError(f"schedule expects {np_old} ranks at iteration {it}, have {current}")
        dims.check_ranks(nt_new)
        prev_iter, current = it, nt_new
    return schedule[0][1] if schedule else ranks


def run_with_reconfig(
    dims: GridDims,
    steps: int,
    schedule: Sequence[tuple[int, int, int]] = (),
    *,
    ranks: int = 1,
    seed: int = 0,
    velocity: str = "constant",
    backend=None,
    plan_hook=None,
) -> np.ndarray:
    """Run ``steps`` donor-cell steps, redistributing at scheduled iteration boundaries.

    ``schedule`` holds ``(iteration, NP, NT)`` triples: after ``iteration``
    steps the ``NP``-rank layout is redistributed onto ``NT`` ranks. Without a
    schedule the run uses ``ranks`` throughout. Returns the global field.
    """
    schedule = [tuple(int(v) for v in entry) for entry in schedule]
    start = _validate_schedule(dims, steps, schedule, ranks)
    state = scatter(init_domain(dims, seed, velocity=velocity), start)
    todo = dict((it, nt) for it, _, nt in schedule)
    while state.iteration < steps:
        advection_step(state, backend)
        if state.iteration in todo:
            state = redistribute(state, todo[state.iteration], plan_hook)
    return state.gather("x")


def checksum(psi: np.ndarray) -> str:
    data = np.ascontiguousarray(psi, dtype="<f8").tobytes()
    return hashlib.sha256(data).hexdigest()


def first_difference(a: np.ndarray, b: np.ndarray) -> tuple[int, ...] | None:
    """Index of the first cell whose bit pattern differs, or None if identical."""
    if a.shape != b.shape:
        return (0,) * a.ndim
    ua = np.ascontiguousarray(a, dtype="<f8").view(np.uint64)
    ub = np.ascontiguousarray(b, dtype="<f8").view(np.uint64)
    diff = np.flatnonzero(ua != ub)
    if diff.size == 0:
        return None
    return tuple(int(i) for i in np.unravel_index(diff[0], a.shape))


def total_mass(psi: np.ndarray) -> float:
    return math.fsum(psi.ravel().tolist())
