"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ShapeError(ValueError):
    """Grid functions that must share a grid do not."""


class PreconditionError(ValueError):
    """A mathematical precondition (e.g. a truncation barrier) does not hold."""


class ConfigError(ValueError):
    """Invalid experiment or estimator configuration."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to converge or produced an invalid result."""


class SimulationError(RuntimeError):
    """A Monte Carlo replication could not be completed."""
