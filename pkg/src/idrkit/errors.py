"""Exception hierarchy shared across the package."""


class IdrKitError(Exception):
    """Base class for all package-specific errors."""


class DomainError(IdrKitError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EmptyInput(IdrKitError, ValueError):
    """A dataset is too small to process (fewer than two signals)."""


class ParseError(IdrKitError, ValueError):
    """A peak file line could not be parsed."""

    def __init__(self, line: int, column: int, reason: str):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class EmptyFile(IdrKitError, ValueError):
    """A peak file contained no usable records."""


class DegenerateComponent(IdrKitError, RuntimeError):
    """An EM component has starved (effective count below threshold)."""


class NumericalUnderflow(IdrKitError, ArithmeticError):
    """A mixture density underflowed to zero at machine precision."""
