"""Exception types shared across the package."""


class FkmetricError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FkmetricError, ValueError):
    """Invalid system, measure, or run configuration."""


class DomainError(FkmetricError, ValueError):
    """Operation called outside its domain (bad lengths, thresholds, points)."""


class HorizonError(DomainError):
    """Symbolic orbit request exceeds the available coordinate horizon."""
