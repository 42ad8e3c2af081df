"""Exception types shared across the package."""


class InfentError(Exception):
    """Base class for all package errors."""


class DomainError(InfentError, ValueError):
    """A parameter lies outside its mathematical domain."""


class InvalidDistributionError(InfentError, ValueError):
    """Weights or masses do not define a probability distribution."""


class AbsoluteContinuityError(InfentError, ValueError):
    """An estimator requires mu << v and a sample symbol falls outside supp(v)."""


class DegenerateConditioningError(InfentError, ValueError):
    """Conditioning event has zero mass."""


class ConfigError(InfentError, ValueError):
    """An experiment configuration is inconsistent or incompatible."""


class FitUnavailableError(InfentError, RuntimeError):
    """A rate fit was requested but the report cannot support one."""


class ReportParseError(InfentError, ValueError):
    """A persisted report file could not be parsed."""
