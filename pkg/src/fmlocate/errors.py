class FmError(Exception):
    pass


class DataError(FmError, ValueError):
    """Bad input data: unreadable or empty files, malformed FASTA, bad patterns."""


class IndexFormatError(FmError):
    """Serialized index could not be decoded."""


class BadMagicError(IndexFormatError):
    pass


class VersionMismatchError(IndexFormatError):
    pass


class TruncatedIndexError(IndexFormatError):
    pass


class ChecksumError(IndexFormatError):
    pass


class UnsupportedStrategyError(FmError, ValueError):
    """Engine requires a sampling strategy the index was not built with."""


class InvariantViolation(FmError, RuntimeError):
    """A kernel detected an internal inconsistency (e.g. output overflow)."""
