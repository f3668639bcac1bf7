"""Deterministic depot-marshalling simulator and safety-analysis toolchain."""

from .world import (
    DepotMap,
    OperatingMode,
    Pose,
    ScenarioConfig,
    TrafficSituation,
    Zone,
    load_scenario,
    mph_to_mps,
    stopping_distance,
    zone_at,
)
from .simulation import Simulation
from .hara import Asil, SecClass, determine_asil

__version__ = "0.1.0"

__all__ = [
    "Asil",
    "DepotMap",
    "OperatingMode",
    "Pose",
    "ScenarioConfig",
    "SecClass",
    "Simulation",
    "TrafficSituation",
    "Zone",
    "determine_asil",
    "load_scenario",
    "mph_to_mps",
    "stopping_distance",
    "zone_at",
    "__version__",
]
