"""Exception types shared across the package."""


class HybridPrecError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HybridPrecError):
    """A configuration value violates a documented invariant."""


class InfeasibleConfigurationError(HybridPrecError):
    """The requested design has no solution for these dimensions."""


class SolverError(HybridPrecError):
    """A linear solve failed; usually fixable with a small ridge term."""


class UnsupportedArchitectureError(HybridPrecError):
    """No device-count convention is defined for this architecture."""
