"""Exception hierarchy shared by the library and the CLI."""


class FreshoptError(Exception):
    """Base class for all errors raised by freshopt."""


class DomainError(FreshoptError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(FreshoptError, ValueError):
    """Inputs are well-formed but violate an operation's precondition."""


class NumericError(FreshoptError, ArithmeticError):
    """A numeric routine failed (non-finite values, no convergence)."""


class NoFiniteRootError(NumericError):
    """Bracket expansion found no sign change in the representable range."""


class InfiniteCostError(NumericError):
    """An expected-cost integral diverges."""


class SchemaError(FreshoptError, ValueError):
    """A serialized document does not match the expected schema.

    Attributes:
        line: 1-based line in the source document, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
