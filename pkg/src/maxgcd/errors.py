"""Exception hierarchy shared by all modules."""


class MaxGcdError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MaxGcdError, ValueError):
    """An argument lies outside the domain of an operation."""


class EmptyTableError(DomainError):
    """A prime table was requested for a limit below 2."""


class InfeasibleError(MaxGcdError):
    """No solution exists for the requested parameters."""


class ResourceError(MaxGcdError):
    """A computation would exceed a configured resource cap."""


class ConfigError(MaxGcdError, ValueError):
    """An experiment configuration is inconsistent or invalid."""


class ReportIOError(MaxGcdError, OSError):
    """Reading or writing a report file failed."""
