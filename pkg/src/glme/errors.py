"""Exception types shared across the fitting modules."""

__all__ = ["ConvergenceError", "DegenerateDataError", "TransformError"]


class ConvergenceError(RuntimeError):
    """An optimizer failed to converge; carries the best result found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateDataError(ValueError):
    """The sample carries no usable variation (e.g. all values equal)."""


class TransformError(ValueError):
    """A parameter-dependent transform left the distribution's support."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
