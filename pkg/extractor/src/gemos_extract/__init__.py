"""Feature export for open-set scoring: frozen backbones -> GMF files."""

from gemos_extract.backbones import INPUT_SIZES, build_backbone, resolve_layers
from gemos_extract.errors import (
    DatasetError,
    ExtractError,
    FormatError,
    SpecError,
    WeightsError,
)
from gemos_extract.extract import POOLINGS, ExtractionSpec, ExtractResult, extract
from gemos_extract.gmf_io import GmfContent, read_gmf, write_gmf
from gemos_extract.verify import VerifyReport, verify_export

__all__ = [
    "DatasetError",
    "ExtractError",
    "ExtractResult",
    "ExtractionSpec",
    "FormatError",
    "GmfContent",
    "INPUT_SIZES",
    "POOLINGS",
    "SpecError",
    "VerifyReport",
    "WeightsError",
    "build_backbone",
    "extract",
    "read_gmf",
    "resolve_layers",
    "verify_export",
    "write_gmf",
]
