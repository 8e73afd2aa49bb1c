"""Exception types raised across the package."""


class ScrewError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ScrewError, ValueError):
    pass


class BranchAmbiguityError(ScrewError):
    """Rotation too close to pi for a unique matrix logarithm."""


class DegenerateTwistError(ScrewError):
    pass


class DegenerateTrajectoryError(ScrewError):
    pass


class CircleFitDegenerateError(DegenerateTrajectoryError):
    pass


class AlignmentError(ScrewError):
    """Two sequences that must line up sample-for-sample do not."""


class NoModelError(ScrewError):
    pass


class ValidationError(ScrewError):
    """Input file or config violates its schema.

    ``row`` and ``column`` locate the offending cell when known.
    """

    def __init__(self, message, row=None, column=None, path=None):
        self.row = row
        self.column = column
        self.path = path
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{': '.join([', '.join(loc)]) + ': ' if loc else ''}{message}")
