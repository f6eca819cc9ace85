"""Error hierarchy. The three families map onto CLI exit codes."""


class UnInfoError(Exception):
    exit_code = 1


class ConfigError(UnInfoError):
    exit_code = 2


class DataError(UnInfoError):
    exit_code = 3


class NumericError(UnInfoError):
    exit_code = 4


# ---- shape / argument errors ----

class ShapeMismatch(DataError, ValueError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class LengthMismatch(ShapeMismatch):
    pass


class BadImageShape(ShapeMismatch):
    pass


class NonUnitRows(ShapeMismatch):
    pass


class BatchTooSmall(DataError, ValueError):
    pass


class EmptyStream(DataError, ValueError):
    pass


class EmptySet(DataError, ValueError):
    pass


class EmptyKinds(ConfigError, ValueError):
    pass


class UnknownKind(ConfigError, ValueError):
    pass


class RankTooLarge(ConfigError, ValueError):
    pass


class TooManyClasses(ConfigError, ValueError):
    pass


# ---- numeric degeneracies ----

class ZeroVectorRow(NumericError, ValueError):
    pass


class ZeroMeanVector(NumericError, ValueError):
    pass


class DegenerateSpectrum(NumericError, ValueError):
    pass


class NonFiniteLoss(NumericError):
    pass


# ---- files ----

class IoError(DataError, OSError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
