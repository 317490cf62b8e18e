"""Exception and warning types shared across the package."""


class ValidationError(ValueError):
    """Bad user input: shapes, domains, malformed files. CLI exit code 2."""


class NumericalError(RuntimeError):
    """A computation could not be completed reliably. CLI exit code 3."""


class WeightDegeneracyWarning(RuntimeWarning):
    """Importance weights collapsed onto very few draws (low effective sample size)."""
