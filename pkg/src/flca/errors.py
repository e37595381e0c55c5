"""Exception taxonomy shared by all flca modules."""


class FlcaError(Exception):
    """Base class for everything this package raises on purpose."""


class InvalidVariant(FlcaError):
    """Transform variant id outside 0..7."""


class CorruptRecord(FlcaError):
    """A serialized transform record cannot be decoded against its context."""


class InternalError(FlcaError):
    """Encoder-side precondition violated; indicates a bug, not bad input."""


class BackendError(FlcaError):
    """An entropy-coding backend failed (typically an external filter)."""

    def __init__(self, message, exit_status=None):
        super().__init__(message)
        self.exit_status = exit_status


class CorruptBlock(FlcaError):
    """A compressed block failed to decode or failed its integrity check."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotAnArchive(FlcaError):
    """Input does not start with a valid archive header."""


class UnexpectedEof(FlcaError):
    """Archive stream ended in the middle of a structure."""


class CorruptArchive(FlcaError):
    """Archive structure is inconsistent (e.g. trailer counts disagree)."""


class CorruptModel(FlcaError):
    """Classifier model file failed validation."""


class RefuseExhaustive(FlcaError):
    """Requested exhaustive state-space enumeration is too large."""


class InsufficientTraining(FlcaError):
    """Not enough training blocks for the requested basin count."""
