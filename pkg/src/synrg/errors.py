"""Exception types raised across the package."""


class SynrgError(Exception):
    """Base class for all package errors."""


class ArgumentError(SynrgError, ValueError):
    """Invalid argument shape, value or combination."""


class NumericError(SynrgError, ArithmeticError):
    """Non-finite values where finite ones are required."""


class UndefinedMetricError(SynrgError, ArithmeticError):
    """A metric whose denominator vanishes (zero-norm tensor, constant target)."""


class DataError(SynrgError):
    """Recording content does not satisfy the experimental protocol."""


class SchemaError(DataError):
    """Recording file does not match the CSV schema.

    Carries the offending location so the CLI can print ``file:row`` diagnostics.
    """

    def __init__(self, message, path=None, row=None, column=None):
        self.path = path
        self.row = row
        self.column = column
        loc = ""
        if path is not None:
            loc = str(path)
            if row is not None:
                loc += f":{row}"
            loc += ": "
        if column is not None:
            message = f"{message} (column {column!r})"
        super().__init__(loc + message)
