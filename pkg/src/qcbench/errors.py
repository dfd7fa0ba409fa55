"""Exception hierarchy shared by the library and the CLI."""


class QCBenchError(Exception):
    """Base class for all qcbench errors."""


class ShapeError(QCBenchError, ValueError):
    """Operand dimensions are inconsistent."""


class ValidationError(QCBenchError, ValueError):
    """An input failed a physicality check (unitarity, Hermiticity, CP, ...)."""


class SizeError(QCBenchError):
    """A dense object would exceed the configured maximum size."""


class RequestError(QCBenchError, ValueError):
    """A computation was requested on data that cannot support it."""


class NumericError(QCBenchError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""


class ParseError(QCBenchError, ValueError):
    """A JSON document does not match its schema; the message carries the JSON path."""
