"""Exception types shared across the package."""


class CitegraphError(Exception):
    """Base class for all errors raised by this package."""


class DataError(CitegraphError):
    """Invalid input data: bad records, unknown ids, malformed files.

    The message always names the offending file, line or id.
    """


class FormatError(DataError):
    """A binary or JSONL artifact does not match its on-disk schema."""
