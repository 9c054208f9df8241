"""Exception hierarchy shared across the package."""


class StratPlanError(Exception):
    """Base class for every error raised by stratplan."""


class ConfigError(StratPlanError, ValueError):
    """A configuration value violates its documented invariants."""


class CapacityExceeded(StratPlanError):
    """A size ceiling (ground actions, oracle bounds) was exceeded."""
