"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class PaspecError(Exception):
    """Base class for all package errors."""


class DomainError(PaspecError, ValueError):
    """A parameter or precondition is outside its valid range."""


class DenseLimitError(DomainError):
    """Dense materialization requested above the configured size limit."""


class GraphFormatError(PaspecError, ValueError):
    """A graph stream is malformed or violates a graph invariant."""


class NumericalError(PaspecError, ArithmeticError):
    """A numerical routine failed or produced a result violating its guarantees."""
