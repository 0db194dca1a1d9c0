"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class SingularityError(DomainError):
    """A symbol or kernel is evaluated at its singular point."""


class PreconditionError(ValueError):
    """Input data violates an operation's stated precondition."""


class AccuracyError(RuntimeError):
    """A numerical procedure could not reach its requested tolerance."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge."""
