"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input data (scenario files, parameter values, matrices)."""


class SizeError(ValueError):
    """Instance too large for an exhaustive/enumerative code path."""
