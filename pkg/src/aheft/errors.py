"""Exception types shared across the package."""


class AheftError(Exception):
    """Base class for all package errors."""


class SizeError(AheftError, ValueError):
    """Dimension or qubit-count mismatch."""


class DomainError(AheftError, ValueError):
    """Argument outside its mathematical domain."""


class QubitIndexError(AheftError, IndexError):
    """Qubit index out of range or repeated."""


class ResourceError(AheftError, RuntimeError):
    """A configured resource cap would be exceeded."""


class NumericError(AheftError, ArithmeticError):
    """Non-finite values or solver non-convergence."""


class UsageError(AheftError, ValueError):
    """Bad experiment id or flag combination."""
