"""Exception types raised across the package."""


class CVLimitsError(Exception):
    """Base class for all package errors."""


class DomainError(CVLimitsError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class UsageError(CVLimitsError, ValueError):
    """An operation was called with an incompatible combination of arguments."""


class TruncationError(CVLimitsError, ArithmeticError):
    """A Fock-space truncation discards more probability mass than allowed.

    The discarded mass is available as ``deficit``.
    """

    def __init__(self, message, deficit):
        super().__init__(f"{message} (deficit={deficit:.3e})")
        self.deficit = float(deficit)
