"""Exception types shared across the engine.

Every error raised on purpose by boxscout derives from :class:`BoxscoutError`,
so callers (and the CLI exit-code mapping) can distinguish engine failures
from plain bugs.
"""


class BoxscoutError(Exception):
    """Base class for all boxscout errors."""


class ConfigError(BoxscoutError):
    """Invalid configuration value; raised before any work is done."""


class ParseError(BoxscoutError):
    """Malformed input document (carries line info when available)."""


class SchemaError(BoxscoutError):
    """Structurally valid document missing a required element or field."""


class InvariantError(BoxscoutError):
    """A domain invariant was violated (inverted box, bad distribution, ...)."""


class DuplicateRecordError(BoxscoutError):
    """Two records in a dump share the same (checkpoint, image) key."""


class UnknownClassError(BoxscoutError):
    """A class name is not part of the active class list."""


class DimensionError(BoxscoutError):
    """A score vector has fewer than two classes."""


class MissingScoreError(BoxscoutError):
    """A batch image has no computed score."""


class ExhaustedError(BoxscoutError):
    """No unlabeled batches remain to select from."""


class StepAbortedError(BoxscoutError):
    """An exploration step was aborted (e.g. the oracle timed out); state is unchanged."""


class MissingRecordError(BoxscoutError):
    """A replay dump has no record for the requested (checkpoint, image) key."""


class EmptyPoolError(BoxscoutError):
    """Both the old and the new example pools are empty."""


class NoClassError(BoxscoutError):
    """No class with ground truth present; mAP is undefined."""


class InsufficientDataError(BoxscoutError):
    """A learning curve has too few checkpoints to integrate."""


class SnapshotError(BoxscoutError):
    """A resume snapshot is corrupt or does not match the run configuration."""
