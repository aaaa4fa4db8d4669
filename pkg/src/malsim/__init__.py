"""Discrete-event simulation of malleable MPI jobs on a small cluster."""

from .cluster import Cluster, ClusterConfig
from .config import ConfigError, RunConfig, load
from .malleability import CostParams, SpawnStrategy
from .scheduler import MalleabilityLimits, Policy
from .simulation import InvariantViolation, Simulation

__version__ = "0.1.0"

__all__ = [
    "Cluster",
    "ClusterConfig",
    "ConfigError",
    "CostParams",
    "InvariantViolation",
    "MalleabilityLimits",
    "Policy",
    "RunConfig",
    "Simulation",
    "SpawnStrategy",
    "load",
]
