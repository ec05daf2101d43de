"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Raised when array arguments have incompatible shapes or dtypes."""


class NumericalError(RuntimeError):
    """Raised when training produces non-finite parameters or losses."""
