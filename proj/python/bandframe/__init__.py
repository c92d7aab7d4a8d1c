"""Bandlimited frames on grid domains.

``run`` drives the same pipeline as the ``bandframe`` command and returns the
report as a dict. ``Problem`` gives direct access to one domain's eigenbasis,
filters and frame.
"""

from ._core import (
    REPORT_SCHEMA,
    AssemblyError,
    CacheError,
    CalibrationError,
    ConfigError,
    ContractViolation,
    EmptyDomainError,
    Error,
    Problem,
    SolverError,
    StageError,
    UnresolvedBandError,
    __version__,
    cutoff,
    filter_value,
    resolve_config,
    run,
    setting_keys,
    summarize,
)

__all__ = [
    "REPORT_SCHEMA",
    "AssemblyError",
    "CacheError",
    "CalibrationError",
    "ConfigError",
    "ContractViolation",
    "EmptyDomainError",
    "Error",
    "Problem",
    "SolverError",
    "StageError",
    "UnresolvedBandError",
    "__version__",
    "cutoff",
    "filter_value",
    "resolve_config",
    "run",
    "setting_keys",
    "summarize",
]
