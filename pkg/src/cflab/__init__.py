"""cflab: continued-fraction machinery, series evaluation, dimension solvers, MC harness."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    ResourceLimitError,
)
from .growth import GrowthConstants, GrowthFunction, classify_series  # noqa: F401
