"""Exception types shared across the package."""


class CtxveError(Exception):
    """Base class for errors raised by this package."""


class IncompatibleContextsError(CtxveError, ValueError):
    """Two contexts assign different values to the same variable."""


class ZeroEvidenceError(CtxveError, RuntimeError):
    """The observed evidence has probability zero under the network."""


class InvariantError(CtxveError, RuntimeError):
    """An internal invariant of an elimination engine was violated."""


class NetworkFormatError(CtxveError, ValueError):
    """A network document could not be parsed or failed validation."""
