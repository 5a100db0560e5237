"""Long-range dependence and multifractality diagnostics for daily return series."""

__version__ = "0.1.0"

from .errors import DataError, MultifractError, PipelineFailure
from .ghe import GheConfig, GheResult, estimate_hurst, qhq_curve, structure_function
from .ingest import (
    QuartileAssignment,
    RawSeries,
    ReturnSeries,
    assign_quartiles,
    load_csv,
    load_universe,
    log_returns,
    validate_continuity,
)
from .mfdfa import MfdfaConfig, MfdfaResult, analyze
from .pipeline import PipelineConfig, run_pipeline, self_check
from .stats import DescriptiveStats, describe, describe_values, jb_from_moments
from .surrogate import (
    SurrogateConfig,
    SurrogateTestReport,
    SurrogateTestResult,
    aggregate_by_quartile,
    shuffle,
    surrogate_test,
)
from .synth import SynthSpec, cascade_hurst, generate

__all__ = [
    "DataError",
    "DescriptiveStats",
    "GheConfig",
    "GheResult",
    "MfdfaConfig",
    "MfdfaResult",
    "MultifractError",
    "PipelineConfig",
    "PipelineFailure",
    "QuartileAssignment",
    "RawSeries",
    "ReturnSeries",
    "SurrogateConfig",
    "SurrogateTestReport",
    "SurrogateTestResult",
    "SynthSpec",
    "aggregate_by_quartile",
    "analyze",
    "assign_quartiles",
    "cascade_hurst",
    "describe",
    "describe_values",
    "estimate_hurst",
    "generate",
    "jb_from_moments",
    "load_csv",
    "load_universe",
    "log_returns",
    "qhq_curve",
    "run_pipeline",
    "self_check",
    "shuffle",
    "structure_function",
    "surrogate_test",
    "validate_continuity",
]
