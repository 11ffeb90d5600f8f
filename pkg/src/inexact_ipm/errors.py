"""Exception hierarchy shared by all modules."""


class StructuralError(ValueError):
    """Dimension mismatch, index out of range or an invalid permutation."""


class DataError(ValueError):
    """Non-finite or otherwise unusable numerical data."""


class StateError(ValueError):
    """An iterate violates a positivity requirement."""


class ModelError(ValueError):
    """An LP model that cannot be converted (e.g. crossing bounds)."""


class MpsParseError(ValueError):
    """Malformed or unsupported MPS input.

    Attributes
    ----------
    lineno : int or None
        1-based line number of the offending line.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class FactorizationError(RuntimeError):
    """The final dense block of a multilevel factorization is singular."""

    def __init__(self, message, level=None, index=None):
        self.level = level
        self.index = index
        super().__init__(message)
