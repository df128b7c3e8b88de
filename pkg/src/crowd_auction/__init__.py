"""Deterministic multi-round reverse-auction simulator for crowd sensing.

Simulates incentive mechanisms for recruiting mobile users as data sellers:
two reverse-auction variants (with and without dynamic recruitment) and a
lottery-contest baseline, with participant satisfaction, dropout, rejoining,
and market-level cost/fairness metrics.
"""

from __future__ import annotations

from .errors import ConfigError, StateError, UndefinedMetricError
from .harness import ExperimentPlan, MetricSeries, derive_seed, run_experiment
from .mechanisms import MechanismEngine
from .model import Mechanism, Participant, RoundRecord, ScenarioConfig, Status

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "StateError",
    "UndefinedMetricError",
    "ExperimentPlan",
    "MetricSeries",
    "derive_seed",
    "run_experiment",
    "MechanismEngine",
    "Mechanism",
    "Participant",
    "RoundRecord",
    "ScenarioConfig",
    "Status",
    "__version__",
]
