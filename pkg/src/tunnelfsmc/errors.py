"""Exception hierarchy.

Two broad classes matter to callers (and to the CLI exit-code contract):
``DataError`` for malformed or out-of-contract inputs, ``NumericalError``
for estimation/optimization failures on otherwise valid data.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""


class DataError(ToolkitError):
    """Invalid, malformed, or out-of-domain input data."""


class ParseError(DataError):
    """A trace/file could not be parsed; carries a 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(ParseError):
    """Sample distances decrease in sequence order."""


class EmptyTraceError(DataError):
    """A trace contains no data rows."""


class DomainError(DataError):
    """An argument falls outside its mathematical domain."""


class InsufficientDataError(DataError):
    """Too few samples for the requested operation."""


class NumericalError(ToolkitError):
    """A numerical procedure failed on structurally valid input."""


class FitError(NumericalError):
    """A distribution fit failed or did not converge."""


class DegenerateSampleError(FitError):
    """Samples carry no spread; the estimator diverges."""


class ConvergenceError(NumericalError):
    """An iterative procedure hit its iteration cap without converging."""


class DegenerateCellError(NumericalError):
    """A quantizer cell captured (numerically) zero probability mass."""


class SelectionError(NumericalError):
    """Every candidate family failed to fit; lists per-family failures."""

    def __init__(self, failures):
        self.failures = dict(failures)
        detail = "; ".join(f"{k}: {v}" for k, v in self.failures.items())
        super().__init__(f"all candidate fits failed ({detail})")


class ModelBuildError(NumericalError):
    """Model assembly failed; message names the offending interval."""
