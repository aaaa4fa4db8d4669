"""Advection kernel with a compiled core and a numpy fallback.

The compiled extension is picked at import when it is importable; set
``MALSIM_KERNEL=python`` to force the numpy path.
"""

import os

from . import _donor_py

try:
    from . import _donor_cy
except ImportError:  # extension not built
    _donor_cy = None

_BACKENDS = {"python": _donor_py}
if _donor_cy is not None:
    _BACKENDS["native"] = _donor_cy


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Return the module implementing ``donor_cell_interior`` for ``name``."""
    if name is None:
        name = BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable (have: {available_backends()})") from None


_forced = os.environ.get("MALSIM_KERNEL")
if _forced:
    get_backend(_forced)
    BACKEND = _forced
else:
    BACKEND = "native" if _donor_cy is not None else "python"

donor_cell_interior = _BACKENDS[BACKEND].donor_cell_interior

from .advection import (  # noqa: E402
    AdvectionState,
    CourantError,
    DistributedState,
    FieldShard,
    GridDims,
    ScheduleError,
    advection_step,
    checksum,
    first_difference,
    halo_exchange,
    init_domain,
    redistribute,
    run_with_reconfig,
    scatter,
)

__all__ = [
    "AdvectionState",
    "BACKEND",
    "CourantError",
    "DistributedState",
    "FieldShard",
    "GridDims",
    "ScheduleError",
    "advection_step",
    "available_backends",
    "checksum",
    "donor_cell_interior",
    "first_difference",
    "get_backend",
    "halo_exchange",
    "init_domain",
    "redistribute",
    "run_with_reconfig",
    "scatter",
]
