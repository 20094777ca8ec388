"""Exception types shared across the toolkit.

The CLI maps :class:`TcmevalError` (and subclasses) to exit code 1 and
everything else to exit code 2.
"""


class TcmevalError(Exception):
    """Base class for all input/usage errors raised by this package."""


class ParseError(TcmevalError):
    """A line of an input file could not be decoded."""


class SchemaError(TcmevalError):
    """A record is missing a required field or has a wrongly typed field."""


class ValidationError(TcmevalError):
    """A record or parameter violates a documented invariant."""


class EmbeddingError(TcmevalError):
    """An embedding provider failed to produce a vector."""
