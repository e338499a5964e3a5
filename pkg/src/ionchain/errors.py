"""Exception hierarchy shared across the package.

``ConfigError`` marks bad user input (CLI exit code 1), ``NumericalError``
marks a solver or physics failure (exit code 2).
"""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SimulationError):
    """Invalid configuration, file format, or argument values."""


class NumericalError(SimulationError):
    """A numerical procedure failed (non-convergence, instability, ...)."""


class UnstableConfigurationError(NumericalError):
    """A Hessian with non-positive eigenvalues: not a stable equilibrium."""


class PositivityError(NumericalError):
    """A density matrix developed negative eigenvalues beyond tolerance."""
