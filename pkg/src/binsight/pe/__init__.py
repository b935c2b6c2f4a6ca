"""PE parsing, the 54-feature schema, and batch extraction."""

from .batch import (
    SKIP_HEADER,
    TABLE_HEADER,
    extract_directory,
    extract_file,
    extract_many,
    read_feature_table,
    sample_id_of,
    write_feature_table,
    write_skip_manifest,
)
from .entropy import shannon_entropy
from .features import (
    FEATURE_COUNT,
    FEATURE_NAMES,
    FLOAT_FEATURES,
    FeatureVector,
    extract_features,
)
from .parser import PeMetadata, SectionInfo, has_pe_signature, parse_pe
from .writer import BuiltPe, ImportDll, PeFileSpec, SectionData, build_pe

__all__ = [
    "BuiltPe",
    "FEATURE_COUNT",
    "FEATURE_NAMES",
    "FLOAT_FEATURES",
    "FeatureVector",
    "ImportDll",
    "PeFileSpec",
    "PeMetadata",
    "SKIP_HEADER",
    "SectionData",
    "SectionInfo",
    "TABLE_HEADER",
    "build_pe",
    "extract_directory",
    "extract_features",
    "extract_file",
    "extract_many",
    "has_pe_signature",
    "parse_pe",
    "read_feature_table",
    "sample_id_of",
    "shannon_entropy",
    "write_feature_table",
    "write_skip_manifest",
]
