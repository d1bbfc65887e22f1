"""Exception types shared across the package."""


class SensoptError(Exception):
    """Base class for every package-specific error."""


class ConfigurationError(SensoptError):
    """A configuration value or parameter combination is invalid."""


class DomainError(SensoptError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(SensoptError):
    """Array dimensions do not match what an operation expects."""


class RangeError(SensoptError):
    """A value exceeds the maximum its normalization was fitted on."""


class CsvParseError(SensoptError):
    """A CSV file could not be parsed.

    Attributes:
        line_number: 1-based line in the offending file, when known.
    """

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class FitError(SensoptError):
    """Too few points inside the fit domain to fit a line."""


class ModelFormatError(SensoptError):
    """A model file is corrupt, truncated or of an unsupported version."""


class TrainingDivergedError(SensoptError):
    """The training loss became non-finite.

    Attributes:
        epoch: 0-based epoch in which the divergence was detected.
        batch: 0-based batch index within that epoch.
        parameter_norm: Euclidean norm of all parameters at detection time.
    """

    def __init__(self, message: str, epoch: int, batch: int, parameter_norm: float):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
        self.parameter_norm = parameter_norm


class SelectionError(SensoptError):
    """No scorable candidate was available for selection."""
