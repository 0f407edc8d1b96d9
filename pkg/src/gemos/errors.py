"""Exception types shared across the package."""


class GemosError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(GemosError):
    """A feature file is malformed: bad magic, wrong version, truncation."""


class ValidationError(GemosError):
    """Data violates a documented invariant (labels, finiteness, shapes)."""


class FitError(GemosError):
    """A model cannot be fitted from the given data (too few rows, bad k)."""
