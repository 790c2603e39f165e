"""Exception hierarchy shared across the toolkit.

Exit-code categories used by the CLI:
  2 - usage / configuration errors
  3 - data / file format errors
  4 - numeric errors
"""


class RelkitError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(RelkitError):
    """Bad configuration value or inconsistent run options."""

    exit_code = 2


class FormatError(RelkitError):
    """Malformed input file (JSONL, TSV, embedding text, checkpoint)."""

    exit_code = 3


class InvalidBoxError(RelkitError):
    """Bounding box with non-positive size or non-finite coordinates."""

    exit_code = 3


class NumericError(RelkitError):
    """Non-finite intermediate value or undefined numeric operation."""

    exit_code = 4


class OutOfVocabularyError(RelkitError):
    """Phrase with no embeddable token in strict mode."""

    exit_code = 3


class EmptySceneError(RelkitError):
    """Operation requires at least one object in the scene."""

    exit_code = 3
