"""Exception types shared across the package."""


class PerfAdaptError(Exception):
    """Base class for all perfadapt errors."""


class ParseError(PerfAdaptError):
    """Malformed input data file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class LabelingError(PerfAdaptError):
    """A label that is not -1 or +1 (or a zero prediction value)."""


class ShapeError(PerfAdaptError):
    """Mismatched vector/matrix dimensions."""


class ParameterError(PerfAdaptError):
    """An out-of-range hyperparameter."""


class MeasureUndefinedError(PerfAdaptError):
    """The requested measure needs both classes present."""


class AdmissibilityError(PerfAdaptError):
    """A label vector outside the measure's admissible set."""


class CapacityError(PerfAdaptError):
    """Exhaustive search requested beyond its size bound."""


class AlignmentError(PerfAdaptError):
    """External predictions that do not align with the dataset."""


class TrainingError(PerfAdaptError):
    """Degenerate training input (empty or single-class data)."""


class ModelFormatError(PerfAdaptError):
    """A model file that cannot be decoded."""
