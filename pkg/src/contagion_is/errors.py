"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(ValueError):
    """A model, policy or run configuration is inconsistent."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (no bracket, non-finite value, ...)."""


class OracleTooLarge(ConfigurationError):
    """The exact oracle was asked for an instance above its state cap."""
