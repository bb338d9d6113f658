"""Exception types shared across the package.

The CLI maps these onto distinct exit codes: configuration problems exit
with 2, stability aborts with 3, numerical failures with 4.
"""


class ConfigurationError(ValueError):
    """Invalid configuration: bad temperatures, schedules, thresholds, ..."""


class DomainError(ValueError):
    """A state lies outside the declared state space."""


class StabilityError(RuntimeError):
    """An energy ring required by the algorithm has zero mass."""


class NumericalError(RuntimeError):
    """A numerical routine failed its own residual or finiteness contract."""
