"""
Exception hierarchy for the mixed precision LSE/GLS solvers.

Every error raised by the library derives from MixedLsError so callers
(the harness in particular) can turn solver failures into a report
status with a single except clause.
"""


class MixedLsError(Exception):
    """Base class for all library errors."""


class DimensionError(MixedLsError, ValueError):
    """Operands have incompatible or invalid shapes."""


class InvalidInput(MixedLsError, ValueError):
    """Operand values are unusable (non-finite entries, bad parameters)."""


class SingularTriangular(MixedLsError, ArithmeticError):
    """A triangular factor has an exactly zero diagonal entry."""

    def __init__(self, index: int, block: str = ""):
        self.index = index
        self.block = block
        where = f" in {block}" if block else ""
        super().__init__(f"zero diagonal at index {index}{where}")


class SpectrumMismatch(MixedLsError):
    """An eigenvalue of the preconditioned matrix is off the predicted set."""

    def __init__(self, value: float, detail: str = ""):
        self.value = value
        msg = f"eigenvalue {value:.12g} outside the predicted spectrum"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class ParseError(MixedLsError):
    """A data file is malformed."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ReportIOError(MixedLsError, OSError):
    """Reading or writing a file failed."""
