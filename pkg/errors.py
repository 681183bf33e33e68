"""
Exception hierarchy for the gaussbesov toolkit.

Service code raises these; the CLI and the HTTP blueprint translate them
into exit codes and status codes.
"""


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


class DimensionMismatchError(ToolkitError, ValueError):
    """A multi-index, a point or a rule disagree on the dimension d"""

    def __init__(self, expected, got, what="point"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class DomainError(ToolkitError, ValueError):
    """A documented precondition of an operation is violated"""


class NumericalError(ToolkitError, ArithmeticError):
    """A numerical contract failed (non-finite input, residual above tolerance, ...)"""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class ConfigError(ToolkitError, ValueError):
    """A run configuration could not be parsed; `path` locates the field"""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
