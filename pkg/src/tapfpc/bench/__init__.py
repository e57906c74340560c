from .oracle import OracleRefused, brute_force_optimum
from .suite import (
    PRESETS,
    SuiteConfig,
    SuiteFailure,
    SuiteReport,
    TierConfig,
    aggregate_rows,
    run_suite,
    solve_instance,
)

__all__ = [
    "OracleRefused",
    "PRESETS",
    "SuiteConfig",
    "SuiteFailure",
    "SuiteReport",
    "TierConfig",
    "aggregate_rows",
    "brute_force_optimum",
    "run_suite",
    "solve_instance",
]
