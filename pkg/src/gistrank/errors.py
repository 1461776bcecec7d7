"""Exception types shared across the package.

The CLI maps these onto exit codes: config problems exit 1, data problems
(parse, integrity, lookup, missing stage artifacts) exit 2, training
failures exit 3.
"""


class GistRankError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(GistRankError):
    """A file could not be parsed; message names the file and line."""


class IntegrityError(GistRankError):
    """Data violates a structural invariant (duplicate ids, bad references)."""


class NotFoundError(GistRankError):
    """A referenced node or record does not exist."""


class ConfigError(GistRankError):
    """Invalid configuration or command-line usage."""


class TrainingError(GistRankError):
    """Model training cannot proceed (e.g. no relevant documents)."""


class StageDependencyError(GistRankError):
    """A pipeline stage is missing an upstream artifact."""
