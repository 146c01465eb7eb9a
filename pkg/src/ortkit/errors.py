"""Exception types shared across the toolkit."""


class OrtkitError(Exception):
    """Base class for all domain errors raised by this package."""


class OutOfRangeError(OrtkitError):
    """Rating value outside the campaign scale bounds."""


class GranularityError(OrtkitError):
    """Rating value not on the scale's step grid."""


class ParseError(OrtkitError):
    """Malformed input file (syntax level)."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = "" if line is None else f" at line {line}" + ("" if column is None else f", column {column}")
        super().__init__(message + loc)
        self.line = line
        self.column = column


class SchemaError(OrtkitError):
    """Syntactically valid input with an invalid shape."""


class IntegrityError(OrtkitError):
    """Campaign-level validation errors found while loading."""

    def __init__(self, message: str, errors: tuple[str, ...] = ()):
        super().__init__(message)
        self.errors = errors


class UnsupportedFormatError(OrtkitError):
    """Unknown serialization format name."""


class ModeMismatchError(OrtkitError):
    """Token sequences with different tokenization modes."""


class LengthMismatchError(OrtkitError):
    """Paired vectors of different lengths."""


class ZeroVarianceError(OrtkitError):
    """A correlation input is constant, so the coefficient is undefined."""


class ShapeMismatchError(OrtkitError):
    """Design matrix and target dimensions do not line up."""


class DegenerateDesignError(OrtkitError):
    """Design matrix has rank zero after centering."""


class FeatureMismatchError(OrtkitError):
    """Prediction input columns differ from the trained feature set."""


class InvalidSizesError(OrtkitError):
    """Requested train/test split sizes are impossible."""


class ItemMismatchError(OrtkitError):
    """Rankings over different item sets cannot be compared."""


class InsufficientAnnotatorsError(OrtkitError):
    """Fewer than two annotators remain after filtering."""


class MissingBaselineError(OrtkitError):
    """No translation source of the optimal kind in the campaign."""
