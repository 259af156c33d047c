"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand dimensions do not agree."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class IngestionError(ValueError):
    """Base class for CSV loading problems."""


class MissingFileError(IngestionError):
    pass


class EmptyDataError(IngestionError):
    pass


class NonNumericCellError(IngestionError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell {value!r} at row {row}, column {column!r}")


class MissingColumnError(IngestionError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"target column {column!r} not found in header")


class ConfigError(ValueError):
    """Invalid experiment or trainer configuration.

    ``field`` carries the path of the offending entry (e.g. ``runs[0].rho``)
    when one can be named.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DivergenceError(RuntimeError):
    def __init__(self, epoch, max_abs):
        self.epoch = epoch
        self.max_abs = max_abs
        super().__init__(f"training diverged at epoch {epoch} (max |w_j| = {max_abs:.3e})")
