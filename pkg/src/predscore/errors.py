"""Exception types shared across the package."""


class PredscoreError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PredscoreError, ValueError):
    """A value or structure violates one of its invariants."""


class UnknownActionError(ValidationError):
    """An action id does not exist in the decision's action set."""


class ParseError(ValidationError):
    """Malformed input file.  Carries the row/column that failed."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column!r})" if column else ")")
        super().__init__(message + where)


class DegenerateDataError(PredscoreError, ValueError):
    """Sample data is degenerate for the requested statistic (e.g. zero variance)."""
