"""Exception types. CLI exit codes hang off these classes."""


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""

    exit_code = 2


class ConstraintError(ConfigError):
    """Probe radius violates eta + 2 R_D > R_Omega in strict mode."""


class NumericRangeError(ArithmeticError):
    """A scaled exponent would leave double-precision range (exit code 3)."""

    exit_code = 3


class DomainError(ValueError):
    """A closed form was requested outside the region where it holds."""


class HeatSolverError(RuntimeError):
    """The forward solver refused the discretization or hit a tiny pivot."""


class MissingFieldError(RuntimeError):
    """Volume data needed for diagnostics was not stored by the solver."""


class EstimationError(ValueError):
    """Too few usable samples, or a singular least-squares system."""
