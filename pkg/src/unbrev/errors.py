"""Error taxonomy shared by the library, the service, and the CLI.

DataError covers malformed or inconsistent inputs (corpora, pair files,
configs pointing at bad data).  ModelError covers missing, corrupt, or
incompatible model artifacts.  Anything else is a plain bug.
"""


class UnbrevError(Exception):
    """Base class for errors raised by this package."""


class DataError(UnbrevError):
    """Input data is malformed or violates a documented precondition."""


class ModelError(UnbrevError):
    """A model artifact is missing, corrupt, or incompatible."""
