"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class DomainError(ValueError):
    """Raised when a quantity is evaluated outside its mathematical domain."""


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
