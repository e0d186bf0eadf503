"""Exception types raised across the package."""


class LogconIcaError(Exception):
    """Base class for all errors raised by logcon_ica."""


class DegenerateSample(LogconIcaError, ValueError):
    """A univariate sample has fewer than two distinct values."""


class RankDeficient(LogconIcaError, ValueError):
    """Observations are concentrated on a hyperplane."""


# The estimator reports rank deficiency of its input under this name.
DegenerateData = RankDeficient


class NotGeneralPosition(LogconIcaError, ValueError):
    """Some d-subset of the selected points is linearly dependent."""


class SingularMatrix(LogconIcaError, ValueError):
    """A matrix that has to be inverted is singular."""


class StallAtStationary(LogconIcaError):
    """Backtracking shrank the step below its floor without ascent."""


class ParseError(LogconIcaError, ValueError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)


class NonFinite(LogconIcaError, ValueError):
    """Input contains NaN or infinite entries."""
