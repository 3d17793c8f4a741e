"""CMA-ES for discrete and mixed-variable optimization on sets of points."""

from .benchmarks import BenchmarkFunction, ProblemInstance, build_instance
from .cma import CMA, DistributionState, StrategyParams, chi_n, default_strategy_params
from .exceptions import (
    ConfigurationError,
    InvalidDimensionError,
    InvalidFitnessError,
    InvalidStateError,
    InvalidSubspaceError,
    NumericalError,
    SoPError,
)
from .harness import Cell, ExperimentConfig, TrialRecord, aggregate, run_experiment, run_trial
from .margin import MarginState, adapt_margin, apply_margin_correction
from .optimizer import CMAESSoP, OptimizerConfig, TerminationReason
from .space import Continuous, PointSet, SearchSpace, encode, load_space, voronoi_neighbors

__version__ = "0.1.0"

__all__ = [
    "BenchmarkFunction", "CMA", "CMAESSoP", "Cell", "ConfigurationError", "Continuous",
    "DistributionState", "ExperimentConfig", "InvalidDimensionError", "InvalidFitnessError",
    "InvalidStateError", "InvalidSubspaceError", "MarginState", "NumericalError", "OptimizerConfig",
    "PointSet", "ProblemInstance", "SearchSpace", "SoPError", "StrategyParams", "TerminationReason",
    "TrialRecord", "adapt_margin", "aggregate", "apply_margin_correction", "build_instance", "chi_n",
    "default_strategy_params", "encode", "load_space", "run_experiment", "run_trial", "voronoi_neighbors",
]
