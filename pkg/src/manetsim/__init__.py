"""Discrete-event MANET simulator: AODV, DSR and OLSR over a unit-disk radio
with per-node energy accounting."""

from manetsim.energy import EnergyParams
from manetsim.radio import RadioConfig
from manetsim.scenario import ScenarioConfig, WorkloadConfig, run_scenario

__all__ = [
    "EnergyParams",
    "RadioConfig",
    "ScenarioConfig",
    "WorkloadConfig",
    "run_scenario",
]

__version__ = "0.1.0"
