"""Fixed 54-column feature schema over parsed PE metadata.

`FEATURE_NAMES` is the canonical column order; every table, index, and
model artifact in this package keeps features in exactly this order.
Integer-valued features stay Python ints (bit-exact through CSV
round-trips); the nine aggregate columns listed in `FLOAT_FEATURES` are
floats.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parser import PeMetadata

FEATURE_NAMES: tuple[str, ...] = (
    "Machine",
    "SizeOfOptionalHeader",
    "Characteristics",
    "MajorLinkerVersion",
    "MinorLinkerVersion",
    "SizeOfCode",
    "SizeOfInitializedData",
    "SizeOfUninitializedData",
    "AddressOfEntryPoint",
    "BaseOfCode",
    "BaseOfData",
    "ImageBase",
    "SectionAlignment",
    "FileAlignment",
    "MajorOperatingSystemVersion",
    "MinorOperatingSystemVersion",
    "MajorImageVersion",
    "MinorImageVersion",
    "MajorSubsystemVersion",
    "MinorSubsystemVersion",
    "SizeOfImage",
    "SizeOfHeaders",
    "CheckSum",
    "Subsystem",
    "DllCharacteristics",
    "SizeOfStackReserve",
    "SizeOfStackCommit",
    "SizeOfHeapReserve",
    "SizeOfHeapCommit",
    "LoaderFlags",
    "NumberOfRvaAndSizes",
    "SectionsNb",
    "SectionsMeanEntropy",
    "SectionsMinEntropy",
    "SectionsMaxEntropy",
    "SectionsMeanRawsize",
    "SectionsMinRawsize",
    "SectionMaxRawsize",
    "SectionsMeanVirtualsize",
    "SectionsMinVirtualsize",
    "SectionMaxVirtualsize",
    "ImportsNbDLL",
    "ImportsNb",
    "ImportsNbOrdinal",
    "ExportNb",
    "ResourcesNb",
    "ResourcesMeanEntropy",
    "ResourcesMinEntropy",
    "ResourcesMaxEntropy",
    "ResourcesMeanSize",
    "ResourcesMinSize",
    "ResourcesMaxSize",
    "LoadConfigurationSize",
    "VersionInformationSize",
)

FEATURE_COUNT = len(FEATURE_NAMES)

#: Names of the columns whose values are floats; all others are ints.
FLOAT_FEATURES = frozenset({
    "SectionsMeanEntropy",
    "SectionsMinEntropy",
    "SectionsMaxEntropy",
    "SectionsMeanRawsize",
    "SectionsMeanVirtualsize",
    "ResourcesMeanEntropy",
    "ResourcesMinEntropy",
    "ResourcesMaxEntropy",
    "ResourcesMeanSize",
})

_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass(frozen=True)
class FeatureVector:
    """One sample's 54 feature values, ordered per FEATURE_NAMES."""

    values: tuple[int | float, ...]
    sample_id: str = ""
    source_path: str = ""
    label: str | None = None

    def __post_init__(self):
        if len(self.values) != FEATURE_COUNT:
            raise ValueError(
                f"expected {FEATURE_COUNT} features, got {len(self.values)}")

    def __getitem__(self, name: str) -> int | float:
        return self.values[_INDEX[name]]

    def as_dict(self) -> dict[str, int | float]:
        return dict(zip(FEATURE_NAMES, self.values))


def extract_features(meta: PeMetadata, sample_id: str = "",
                     source_path: str = "",
                     label: str | None = None) -> FeatureVector:
    """Project parsed metadata onto the canonical 54-feature vector.

    Aggregates over empty collections (no sections, no resources) are 0.
    """
    raw_sizes = [s.raw_size for s in meta.sections]
    virt_sizes = [s.virtual_size for s in meta.sections]
    entropies = [s.entropy for s in meta.sections]
    res_sizes = [size for size, _ in meta.resources]
    res_entropies = [ent for _, ent in meta.resources]

    def mean(xs) -> float:
        return sum(xs) / len(xs) if xs else 0.0

    values: tuple[int | float, ...] = (
        meta.machine,
        meta.size_of_optional_header,
        meta.characteristics,
        meta.major_linker_version,
        meta.minor_linker_version,
        meta.size_of_code,
        meta.size_of_initialized_data,
        meta.size_of_uninitialized_data,
        meta.address_of_entry_point,
        meta.base_of_code,
        meta.base_of_data,
        meta.image_base,
        meta.section_alignment,
        meta.file_alignment,
        meta.major_os_version,
        meta.minor_os_version,
        meta.major_image_version,
        meta.minor_image_version,
        meta.major_subsystem_version,
        meta.minor_subsystem_version,
        meta.size_of_image,
        meta.size_of_headers,
        meta.checksum,
        meta.subsystem,
        meta.dll_characteristics,
        meta.size_of_stack_reserve,
        meta.size_of_stack_commit,
        meta.size_of_heap_reserve,
        meta.size_of_heap_commit,
        meta.loader_flags,
        meta.number_of_rva_and_sizes,
        len(meta.sections),
        mean(entropies),
        min(entropies, default=0.0),
        max(entropies, default=0.0),
        mean(raw_sizes),
        min(raw_sizes, default=0),
        max(raw_sizes, default=0),
        mean(virt_sizes),
        min(virt_sizes, default=0),
        max(virt_sizes, default=0),
        len(meta.imports),
        sum(n for _, n, _ in meta.imports),
        sum(o for _, _, o in meta.imports),
        meta.export_count,
        len(meta.resources),
        mean(res_entropies),
        min(res_entropies, default=0.0),
        max(res_entropies, default=0.0),
        mean(res_sizes),
        min(res_sizes, default=0),
        max(res_sizes, default=0),
        meta.load_configuration_size,
        meta.version_info_entry_count,
    )
    return FeatureVector(values, sample_id=sample_id,
                         source_path=source_path, label=label)
