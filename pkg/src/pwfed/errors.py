"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Parameter structures, tensors or architectures do not line up."""


class NumericError(ArithmeticError):
    """A non-finite value showed up where only finite values are allowed."""


class IdxFormatError(ValueError):
    """An IDX file header carries an unexpected magic number or layout."""


class IdxConsistencyError(ValueError):
    """Image and label IDX files disagree with each other."""


class IdxTruncatedError(OSError):
    """An IDX file ends before the payload its header promises."""


class ConfigError(ValueError):
    """An experiment configuration is missing, malformed or inconsistent."""
