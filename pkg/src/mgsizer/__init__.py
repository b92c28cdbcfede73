"""Microgrid sizing by stochastic multi-objective genetic optimization.

The public surface, in pipeline order: device models, scenario
construction, rule-based dispatch, two-objective evaluation, the genetic
searches, and frontier metrics. ExperimentConfig ties them to one
validated configuration document; the console entry point lives in
mgsizer.cli.
"""

from mgsizer.config import ConfigError, DEFAULTS, ExperimentConfig, load_config
from mgsizer.devices import (BatteryState, BessParams, DgParams, PvParams,
                             WtParams, capacity_loss, pv_power, wt_power)
from mgsizer.dispatch import (InvariantViolation, MicrogridParams,
                              OperationTrace, SizingBounds, SizingConfig,
                              simulate)
from mgsizer.metrics import WorstCase, diverse_count, largest_ora, ora
from mgsizer.moga import (GaResult, GaSettings, ParetoFrontier, run_baseline,
                          run_samoga)
from mgsizer.objectives import (CostBreakdown, Evaluator, ObjectiveVector,
                                SizingProblem, TariffSchedule, evaluate)
from mgsizer.scenarios import (HourlyDistribution, Scenario, ScenarioSet,
                               kmeans_reduce, lhs_sample, subsample)

__version__ = "0.1.0"

__all__ = [
    "BatteryState", "BessParams", "ConfigError", "CostBreakdown", "DEFAULTS",
    "DgParams", "Evaluator", "ExperimentConfig", "GaResult", "GaSettings",
    "HourlyDistribution", "InvariantViolation", "MicrogridParams",
    "ObjectiveVector", "OperationTrace", "ParetoFrontier", "PvParams",
    "Scenario", "ScenarioSet", "SizingBounds", "SizingConfig",
    "SizingProblem", "TariffSchedule", "WorstCase", "WtParams",
    "capacity_loss", "diverse_count", "evaluate", "kmeans_reduce",
    "largest_ora", "lhs_sample", "load_config", "ora", "pv_power",
    "run_baseline", "run_samoga", "simulate", "subsample", "wt_power",
]
