"""Error hierarchy for the extraction pipeline."""


class ExtractError(Exception):
    """Base class; the CLI maps these to exit code 2."""


class SpecError(ExtractError):
    """Invalid extraction request (bad layer, pooling, or parameters)."""


class WeightsError(ExtractError):
    """Checkpoint missing, malformed, or mismatched to the architecture."""


class DatasetError(ExtractError):
    """Dataset unavailable or unreadable."""


class FormatError(ExtractError):
    """GMF file malformed or violating its invariants."""
