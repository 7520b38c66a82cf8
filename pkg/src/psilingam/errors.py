class DataError(ValueError):
    """Input data violates a structural requirement (shape, finiteness, variance)."""


class NumericalError(ArithmeticError):
    """A computation hit a degenerate numerical configuration."""


class DegeneracyWarning(RuntimeWarning):
    """A degenerate sub-problem was skipped or repaired instead of aborting."""
