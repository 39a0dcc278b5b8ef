"""Exception hierarchy shared by the whole package.

The CLI maps :class:`ConfigError` to exit code 1 and
:class:`NumericalIntegrityError` (and subclasses) to exit code 2.
"""


class LiouvexError(Exception):
    """Base class for all package errors."""


class ConfigError(LiouvexError, ValueError):
    """Invalid configuration file or experiment plan."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericalIntegrityError(LiouvexError, ArithmeticError):
    """A numerical invariant (Hermiticity, norm, convergence) was violated."""


class PropagationError(NumericalIntegrityError):
    """The truncated Taylor series failed to converge within its term cap."""


class DegenerateDataError(NumericalIntegrityError):
    """Every singular value of the snapshot matrix fell below the cutoff."""
