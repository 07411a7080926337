"""Time-reversal enclosure method for cavity detection in a heat conductor.

The package builds a moderate boundary heat flux from the time-reversed normal
derivative of a free-space wave, solves the forward heat problem on a
concentric-sphere body, forms the Laplace-in-time boundary indicator and
extracts the radius of the minimum sphere about ``p`` that encloses the cavity.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConstraintError,
    DomainError,
    EstimationError,
    HeatSolverError,
    MissingFieldError,
    NumericRangeError,
)
from .geometry import BodySpec, Discretization, ProbeBall, check_constraint, radius_sup

__all__ = [
    "__version__",
    "BodySpec",
    "ConfigError",
    "ConstraintError",
    "Discretization",
    "DomainError",
    "EstimationError",
    "HeatSolverError",
    "MissingFieldError",
    "NumericRangeError",
    "ProbeBall",
    "check_constraint",
    "radius_sup",
]
