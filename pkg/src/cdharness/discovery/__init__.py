"""Causal-discovery algorithms and suite orchestration."""

from .suite import (
    AlgoConfig,
    AlgoFailure,
    AlgoOutput,
    SuiteResult,
    format_algo_output,
    run_suite,
)
from .pc import pc
from .hillclimb import hill_climb_bic
from .lingam import LinearScm, direct_lingam, generate_linear_scm_data

__all__ = [
    "AlgoConfig",
    "AlgoFailure",
    "AlgoOutput",
    "SuiteResult",
    "LinearScm",
    "direct_lingam",
    "format_algo_output",
    "generate_linear_scm_data",
    "hill_climb_bic",
    "pc",
    "run_suite",
]
