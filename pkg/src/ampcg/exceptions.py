"""
Exception hierarchy shared by the library and the command line.

The command line maps ``InputFormatError`` to exit code 2, ``PreconditionError``
to exit code 3 and ``UsageError`` to exit code 1.
"""


class AMPCGError(Exception):
    """Base class for every error raised by ampcg."""


class UsageError(AMPCGError):
    pass


class InputFormatError(AMPCGError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphFormatError(InputFormatError):
    def __str__(self):
        return "Invalid graph file: " + super().__str__()


class DataFormatError(InputFormatError):
    def __str__(self):
        return "Invalid dataset: " + super().__str__()


class ConfigError(InputFormatError):
    def __str__(self):
        return "Invalid configuration: " + super().__str__()


class PreconditionError(AMPCGError):
    pass


class InvalidQueryError(PreconditionError):
    pass


class AdjacentVerticesError(PreconditionError):
    def __init__(self, u, v):
        super().__init__(f"{u} and {v} are adjacent, no separator exists")


class NotASeparatorError(PreconditionError):
    def __init__(self, u, v, Z):
        shown = ",".join(sorted(Z)) or "{}"
        super().__init__(f"Z is not a separator: {shown} does not separate {u} from {v}")


class GraphMismatchError(PreconditionError):
    pass


class InsufficientSampleError(PreconditionError):
    pass


class DegenerateTestError(PreconditionError):
    pass


class SingularMatrixError(PreconditionError):
    pass


class NotChordalError(PreconditionError):
    pass
