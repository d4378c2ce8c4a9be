"""Exception hierarchy shared across the toolkit.

``ParseError`` and ``ValidationError`` mean the *input* was bad (CLI exit
code 1); every other ``SedkitError`` is a runtime failure (exit code 2).
"""


class SedkitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(SedkitError):
    """A document (matrix file, prediction log, config) is malformed."""


class ValidationError(SedkitError):
    """Structurally parseable input violates a semantic contract."""


class TrainingDivergedError(SedkitError):
    """Training produced non-finite loss or parameters."""
