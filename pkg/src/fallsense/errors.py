"""Exception hierarchy shared by every pipeline stage."""


class FallSenseError(Exception):
    """Base class for all errors raised by fallsense."""


class DataError(FallSenseError, ValueError):
    """Input data violates a documented contract (CLI exit code 2)."""


class EmptyTrace(DataError):
    pass


class RateMismatch(DataError):
    pass


class EmptyWindow(DataError):
    pass


class WrongWindowLength(DataError):
    pass


class UninitializedGravity(FallSenseError, RuntimeError):
    pass


class SignalTooShort(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class LabelOutOfRange(DataError):
    pass


class EmptyDataset(DataError):
    pass


class CorruptFile(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class InsufficientOverlap(DataError):
    pass
