"""Exception types shared across the retrieval pipeline."""


class DeskdprError(Exception):
    """Base class for all library errors."""


class EmptyDocument(DeskdprError):
    """Document body is empty after cleaning."""


class ParseError(DeskdprError):
    """A persisted artifact or input file is malformed."""


class DuplicateId(DeskdprError):
    """Two passages share the same passage_id."""


class EmptyCorpus(DeskdprError):
    """An index build was attempted over zero passages."""


class DimensionError(DeskdprError):
    """Vector dimensions do not match."""


class CorruptIndex(DeskdprError):
    """A dense index file failed magic, length, or checksum validation."""


class UnsupportedVersion(DeskdprError):
    """A persisted artifact has an unknown format version."""


class EmptyEvaluation(DeskdprError):
    """Evaluation was requested over an empty question set."""


class StaleInput(DeskdprError):
    """Recorded input checksums no longer match the files on disk."""
