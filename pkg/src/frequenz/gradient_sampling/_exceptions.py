# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Base exception classes.

# Exceptions

All exceptions generated on purpose by this library inherit from the
[`Error`][frequenz.gradient_sampling.Error] exception.

Problems with the input data (a CSV without the configured columns, a malformed row,
a prediction for a day that was never fitted, ...) raise a
[`DataError`][frequenz.gradient_sampling.DataError] or one of its subclasses.
Numerical breakdowns raise a
[`NumericalError`][frequenz.gradient_sampling.NumericalError]. Invalid configuration
files raise a [`ConfigError`][frequenz.gradient_sampling.ConfigError].

Invalid parameter objects (for example a quantile level outside `(0, 1)`) raise
a plain [`ValueError`][] when they are constructed.

# Causes

When an exception is caused by another exception, for example when a quantity can't be
parsed as a number, the original exception is available as the cause:

```python
from frequenz.gradient_sampling import RowError
from frequenz.gradient_sampling.panel import CsvSchema, parse_csv

try:
    parse_csv(b"date,hour,qty\\n2012-11-07,6,many\\n", CsvSchema())
except RowError as error:
    print(f"Line {error.line_number}: {error} (caused by {error.__cause__!r})")
```
"""

from collections.abc import Mapping
from typing import Any


class Error(RuntimeError):
    """An error that originated in this library.

    This is useful if you want to catch all exceptions generated by this library.
    """

    def __init__(self, message: str):
        """Initialize this error.

        Args:
            message: The error message.
        """
        super().__init__(message)


class DataError(Error):
    """The input data violates a contract of the library."""


class SchemaError(DataError):
    """A CSV stream doesn't have the expected header."""

    def __init__(self, message: str, column: str | None = None):
        """Initialize this error.

        Args:
            message: The error message.
            column: The configured column that is missing, if any.
        """
        super().__init__(message)
        self.column: str | None = column
        """The configured column that is missing, if any."""


class RowError(DataError):
    """A data row of a CSV stream can't be turned into a record."""

    def __init__(self, message: str, line_number: int, row: Mapping[str, Any]):
        """Initialize this error.

        Args:
            message: The error message.
            line_number: The 1-based line of the row in the stream (the header is
                line 1).
            row: The raw row, as read from the stream.
        """
        super().__init__(f"line {line_number}: {message}")
        self.line_number: int = line_number
        """The 1-based line of the row in the stream."""

        self.row: Mapping[str, Any] = row
        """The raw row, as read from the stream."""


class PanelError(DataError):
    """A record can't be placed in a sales panel."""

    def __init__(self, message: str, record: Any):
        """Initialize this error.

        Args:
            message: The error message.
            record: The offending record.
        """
        super().__init__(f"{message}: {record!r}")
        self.record: Any = record
        """The offending record."""


class UnsupportedDistributionError(DataError):
    """A synthetic data distribution tag is not known."""

    def __init__(self, tag: str):
        """Initialize this error.

        Args:
            tag: The unknown tag.
        """
        super().__init__(f"Unsupported distribution {tag!r}")
        self.tag: str = tag
        """The unknown tag."""


class DayClassNotFoundError(DataError):
    """A day class was requested that is not part of a fitted surface."""

    def __init__(self, day: int):
        """Initialize this error.

        Args:
            day: The requested day class.
        """
        super().__init__(f"Day class {day} is not part of the fitted surface")
        self.day: int = day
        """The requested day class."""


class NumericalError(Error):
    """A numerical procedure broke down."""


class MinNormError(NumericalError):
    """The min-norm point of a gradient bundle couldn't be computed."""

    def __init__(self, message: str, bundle_size: int):
        """Initialize this error.

        Args:
            message: The error message.
            bundle_size: The number of points in the bundle.
        """
        super().__init__(f"{message} (bundle of {bundle_size} points)")
        self.bundle_size: int = bundle_size
        """The number of points in the bundle."""


class ConfigError(Error):
    """A configuration file or value is invalid."""
