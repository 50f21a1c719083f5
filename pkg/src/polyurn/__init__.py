"""Simulation and analysis of positively reinforced, time-dependent Polya urns."""
from . import harness, meanfield, reinforce, schedule, urn
from .harness import BatchReport, ExperimentConfig, run_batch
from .meanfield import MeanFieldModel
from .reinforce import ReinforcementSpec, power, power_exp, tabulated
from .schedule import ScheduleSpec, constant, explicit, polynomial
from .urn import UrnState, replication_rng

__version__ = "0.1.0"

__all__ = [
    "BatchReport", "ExperimentConfig", "MeanFieldModel", "ReinforcementSpec", "ScheduleSpec",
    "UrnState", "constant", "explicit", "harness", "meanfield", "polynomial", "power",
    "power_exp", "reinforce", "replication_rng", "run_batch", "schedule", "tabulated", "urn",
]
