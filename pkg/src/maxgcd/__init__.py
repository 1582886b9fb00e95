"""Extremes of pairwise GCDs among random integers: bounds, models and experiments."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    EmptyTableError,
    InfeasibleError,
    MaxGcdError,
    ReportIOError,
    ResourceError,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "EmptyTableError",
    "InfeasibleError",
    "MaxGcdError",
    "ReportIOError",
    "ResourceError",
    "__version__",
]
