"""Shared exception types, mapped to CLI exit codes (1 = domain, 2 = resource)."""


class DomainError(ValueError):
    """Invalid argument or out-of-domain request."""


class ResourceLimitError(RuntimeError):
    """Enumeration or memory budget exceeded."""


class InsufficientDataError(DomainError):
    """Not enough data to evaluate (table-backed growth functions)."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge; carries its iteration trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
