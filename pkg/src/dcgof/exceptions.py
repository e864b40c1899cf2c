"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericalError -> 3.
"""


class DcgofError(Exception):
    """Base class for all package errors."""


class DataError(DcgofError):
    """Malformed input, invalid parameters, or inconsistent configuration."""


class NumericalError(DcgofError):
    """Algorithmic failure: non-convergence, degenerate sampling, zero spread."""
