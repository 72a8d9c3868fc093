"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration/data problems exit 2,
numeric failures exit 3.
"""


class DdimError(Exception):
    """Base class for all package errors."""


class ConfigError(DdimError, ValueError):
    """Invalid configuration (bad schedule, out-of-range hyperparameter, ...)."""


class DataFormatError(DdimError, ValueError):
    """Malformed input data. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaVersionError(DataFormatError):
    """Trace or cache file written with an unsupported schema version."""


class NumericError(DdimError, ArithmeticError):
    """A numeric procedure failed (quadrature blow-up, no feasible model, ...)."""


class InsufficientDataError(NumericError):
    """Too few observations for the requested model size."""


class DegenerateAssignmentError(NumericError):
    """A latent assignment starves some cluster below the minimum count."""


class NoValidModelError(NumericError):
    """Every candidate model has infinite penalized codelength."""
