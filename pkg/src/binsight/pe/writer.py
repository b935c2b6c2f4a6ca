"""Minimal PE file builder.

Writes small but structurally valid PE32 / PE32+ executables with
configurable header fields, sections, import/export tables, resources
(including a version-information resource), and a load-configuration
directory. The synthetic corpus generator wraps its payloads with this
builder, and the test suite uses it as the writing-side oracle for the
parser, so this module must stay independent of the parsing code: it lays
out every structure from scratch with its own offsets.

Returned ``BuiltPe`` records exactly what was written (header scalars by
their canonical feature names, section contents, import/resource
summaries) so callers can compare against a later parse without
re-deriving the layout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

SECTION_CODE = 0x60000020  # code | execute | read
SECTION_DATA = 0xC0000040  # initialized data | read | write
SECTION_RDATA = 0x40000040  # initialized data | read

_RT_RCDATA = 10
_RT_VERSION = 16
_LANG_EN_US = 0x0409
_TRANSLATION = 0x04B00409  # en-US, Unicode codepage


@dataclass(frozen=True)
class SectionData:
    """One section to emit: raw content plus declared sizes."""

    name: str
    data: bytes
    virtual_size: int | None = None  # defaults to len(data)
    characteristics: int = SECTION_DATA


@dataclass(frozen=True)
class ImportDll:
    """Imports from one DLL: named symbols and ordinal-only entries."""

    dll: str
    names: tuple[str, ...] = ()
    ordinals: tuple[int, ...] = ()


@dataclass(frozen=True)
class PeFileSpec:
    """Configuration for one synthetic PE.

    Fields left as ``None`` are computed from the layout (sizes, entry
    point, image extent); explicit values are written verbatim, which is
    what makes the builder usable as a known-value oracle.
    """

    pe32_plus: bool = False
    machine: int | None = None
    characteristics: int = 0x0102  # executable image | 32-bit machine
    major_linker_version: int = 14
    minor_linker_version: int = 0
    size_of_code: int | None = None
    size_of_initialized_data: int | None = None
    size_of_uninitialized_data: int = 0
    address_of_entry_point: int | None = None
    base_of_code: int | None = None
    base_of_data: int | None = None
    image_base: int | None = None
    section_alignment: int = 0x1000
    file_alignment: int = 0x200
    major_os_version: int = 6
    minor_os_version: int = 0
    major_image_version: int = 0
    minor_image_version: int = 0
    major_subsystem_version: int = 6
    minor_subsystem_version: int = 0
    size_of_image: int | None = None
    size_of_headers: int | None = None
    checksum: int = 0
    subsystem: int = 3  # console
    dll_characteristics: int = 0
    size_of_stack_reserve: int = 0x100000
    size_of_stack_commit: int = 0x1000
    size_of_heap_reserve: int = 0x100000
    size_of_heap_commit: int = 0x1000
    loader_flags: int = 0
    number_of_rva_and_sizes: int = 16

    sections: tuple[SectionData, ...] = (
        SectionData(".text", b"\xc3" * 64, characteristics=SECTION_CODE),
    )
    imports: tuple[ImportDll, ...] = ()
    export_count: int = 0
    resources: tuple[bytes, ...] = ()
    version_strings: tuple[tuple[str, str], ...] = ()
    load_config_size: int = 0


@dataclass
class BuiltPe:
    """A built file plus a faithful record of everything written."""

    data: bytes
    header: dict[str, int]  # canonical feature name -> value written
    sections: list[SectionData]  # resolved (virtual_size filled in)
    import_table: list[tuple[str, int, int]]  # dll, symbol count, ordinal count
    export_count: int
    resources: list[bytes]
    load_config_size: int
    version_entry_count: int


def _align(value: int, alignment: int) -> int:
    return (value + alignment - 1) // alignment * alignment


def _utf16z(text: str) -> bytes:
    return text.encode("utf-16-le") + b"\x00\x00"


def _build_import_section(base_rva: int, dlls: tuple[ImportDll, ...], pe32_plus: bool) -> bytes:
    entry_size = 8 if pe32_plus else 4
    ordinal_flag = 0x8000000000000000 if pe32_plus else 0x80000000
    entry_fmt = "<Q" if pe32_plus else "<I"

    desc_table_size = (len(dlls) + 1) * 20
    cursor = desc_table_size

    thunk_rvas = []  # (oft_rva, ft_rva) per dll
    for dll in dlls:
        n = len(dll.names) + len(dll.ordinals) + 1
        thunk_rvas.append((base_rva + cursor, base_rva + cursor + n * entry_size))
        cursor += 2 * n * entry_size

    hint_name_rvas: dict[tuple[int, str], int] = {}
    hint_blob = bytearray()
    for i, dll in enumerate(dlls):
        for name in dll.names:
            hint_name_rvas[(i, name)] = base_rva + cursor + len(hint_blob)
            entry = struct.pack("<H", 0) + name.encode("ascii") + b"\x00"
            if len(entry) % 2:
                entry += b"\x00"
            hint_blob += entry
    cursor += len(hint_blob)

    dll_name_rvas = []
    name_blob = bytearray()
    for dll in dlls:
        dll_name_rvas.append(base_rva + cursor + len(name_blob))
        name_blob += dll.dll.encode("ascii") + b"\x00"

    out = bytearray()
    for i, dll in enumerate(dlls):
        oft_rva, ft_rva = thunk_rvas[i]
        out += struct.pack("<IIIII", oft_rva, 0, 0, dll_name_rvas[i], ft_rva)
    out += b"\x00" * 20  # terminator descriptor

    for i, dll in enumerate(dlls):
        thunks = bytearray()
        for name in dll.names:
            thunks += struct.pack(entry_fmt, hint_name_rvas[(i, name)])
        for ordinal in dll.ordinals:
            thunks += struct.pack(entry_fmt, ordinal_flag | ordinal)
        thunks += struct.pack(entry_fmt, 0)
        out += thunks + thunks  # OriginalFirstThunk array then FirstThunk copy

    out += hint_blob
    out += name_blob
    return bytes(out)


def _build_export_section(base_rva: int, export_count: int, entry_rva: int) -> bytes:
    func_table_off = 40
    name_off = func_table_off + 4 * export_count
    directory = struct.pack(
        "<IIHHIIIIIII",
        0,  # characteristics
        0,  # timestamp
        0, 0,  # version
        base_rva + name_off,  # module name RVA
        1,  # ordinal base
        export_count,
        0,  # no named exports
        base_rva + func_table_off,
        0, 0,
    )
    functions = b"".join(struct.pack("<I", entry_rva) for _ in range(export_count))
    return directory + functions + b"self.dll\x00"


def _build_version_blob(strings: tuple[tuple[str, str], ...]) -> bytes:
    def block(key: str, value_len: int, value_type: int, value: bytes, children: bytes) -> bytes:
        # Blocks always start 4-aligned, so padding accounts for the
        # 6-byte (length, value length, type) prefix before the key.
        body = bytearray()
        body += _utf16z(key)
        while (6 + len(body)) % 4:
            body.append(0)
        body += value
        while (6 + len(body)) % 4:
            body.append(0)
        body += children
        length = 6 + len(body)
        return struct.pack("<HHH", length, value_len, value_type) + bytes(body)

    fixed = struct.pack(
        "<IIIIIIIIIIIII",
        0xFEEF04BD,  # signature
        0x00010000,  # structure version
        0x00010000, 0,  # file version
        0x00010000, 0,  # product version
        0x3F, 0,  # flags mask, flags
        0x00040004,  # Windows NT
        0x00000001,  # application
        0, 0, 0,  # subtype, date
    )

    string_blocks = b""
    for key, value in strings:
        val = _utf16z(value)
        string_blocks += block(key, len(value) + 1, 1, val, b"")
        while len(string_blocks) % 4:
            string_blocks += b"\x00"
    table = block("040904B0", 0, 1, b"", string_blocks)
    sfi = block("StringFileInfo", 0, 1, b"", table)

    var = block("Translation", 4, 0, struct.pack("<I", _TRANSLATION), b"")
    vfi = block("VarFileInfo", 0, 1, b"", var)

    return block("VS_VERSION_INFO", len(fixed), 0, fixed, sfi + vfi)


def _build_resource_section(base_rva: int, leaves: list[tuple[int, int, bytes]]) -> bytes:
    # leaves: (type_id, resource_id, blob); tree is type -> id -> language.
    by_type: dict[int, list[tuple[int, bytes]]] = {}
    for type_id, res_id, blob in leaves:
        by_type.setdefault(type_id, []).append((res_id, blob))
    type_ids = sorted(by_type)
    for tid in type_ids:
        by_type[tid].sort(key=lambda pair: pair[0])

    def dir_header(entry_count: int) -> bytes:
        return struct.pack("<IIHHHH", 0, 0, 0, 0, 0, entry_count)

    root_size = 16 + 8 * len(type_ids)
    type_dir_offsets: dict[int, int] = {}
    cursor = root_size
    for tid in type_ids:
        type_dir_offsets[tid] = cursor
        cursor += 16 + 8 * len(by_type[tid])
    lang_dir_offsets: dict[tuple[int, int], int] = {}
    for tid in type_ids:
        for rid, _ in by_type[tid]:
            lang_dir_offsets[(tid, rid)] = cursor
            cursor += 16 + 8  # one language entry per resource
    data_entry_offsets: dict[tuple[int, int], int] = {}
    for tid in type_ids:
        for rid, _ in by_type[tid]:
            data_entry_offsets[(tid, rid)] = cursor
            cursor += 16

    blob_offsets: dict[tuple[int, int], int] = {}
    for tid in type_ids:
        for rid, blob in by_type[tid]:
            cursor = _align(cursor, 4)
            blob_offsets[(tid, rid)] = cursor
            cursor += len(blob)

    out = bytearray()
    out += dir_header(len(type_ids))
    for tid in type_ids:
        out += struct.pack("<II", tid, 0x80000000 | type_dir_offsets[tid])
    for tid in type_ids:
        out += dir_header(len(by_type[tid]))
        for rid, _ in by_type[tid]:
            out += struct.pack("<II", rid, 0x80000000 | lang_dir_offsets[(tid, rid)])
    for tid in type_ids:
        for rid, _ in by_type[tid]:
            out += dir_header(1)
            out += struct.pack("<II", _LANG_EN_US, data_entry_offsets[(tid, rid)])
    for tid in type_ids:
        for rid, blob in by_type[tid]:
            out += struct.pack("<IIII", base_rva + blob_offsets[(tid, rid)], len(blob), 0, 0)
    for tid in type_ids:
        for rid, blob in by_type[tid]:
            while len(out) % 4:
                out.append(0)
            out += blob
    return bytes(out)


def build_pe(spec: PeFileSpec) -> BuiltPe:
    """Serialize ``spec`` to file bytes, recording every written value."""
    opt_size = 0xF0 if spec.pe32_plus else 0xE0

    sections: list[SectionData] = [
        SectionData(s.name, s.data,
                    len(s.data) if s.virtual_size is None else s.virtual_size,
                    s.characteristics)
        for s in spec.sections
    ]

    version_blob = _build_version_blob(spec.version_strings) if spec.version_strings else None
    resource_leaves: list[tuple[int, int, bytes]] = [
        (_RT_RCDATA, i + 1, blob) for i, blob in enumerate(spec.resources)
    ]
    if version_blob is not None:
        resource_leaves.append((_RT_VERSION, 1, version_blob))

    # Assign RVAs sequentially: user sections first, then generated ones,
    # whose content depends on their own base RVA.
    rva_cursor = spec.section_alignment
    placed: list[tuple[SectionData, int]] = []  # (resolved section, rva)

    def place(section: SectionData) -> int:
        nonlocal rva_cursor
        rva = rva_cursor
        placed.append((section, rva))
        rva_cursor = _align(rva + max(section.virtual_size or 0, len(section.data), 1),
                            spec.section_alignment)
        return rva

    code_rva = None
    data_rva = None
    for section in sections:
        rva = place(section)
        if code_rva is None and section.characteristics & 0x20:
            code_rva = rva
        if data_rva is None and section.characteristics & 0x40:
            data_rva = rva

    entry_point = spec.address_of_entry_point
    if entry_point is None:
        entry_point = code_rva if code_rva is not None else spec.section_alignment

    directories: dict[int, tuple[int, int]] = {}

    import_summary: list[tuple[str, int, int]] = []
    if spec.imports:
        rva = rva_cursor
        blob = _build_import_section(rva, spec.imports, spec.pe32_plus)
        place(SectionData(".idata", blob, len(blob), SECTION_DATA))
        directories[1] = (rva, (len(spec.imports) + 1) * 20)
        import_summary = [
            (d.dll, len(d.names) + len(d.ordinals), len(d.ordinals)) for d in spec.imports
        ]

    if spec.export_count:
        rva = rva_cursor
        blob = _build_export_section(rva, spec.export_count, entry_point)
        place(SectionData(".edata", blob, len(blob), SECTION_RDATA))
        directories[0] = (rva, len(blob))

    if resource_leaves:
        rva = rva_cursor
        blob = _build_resource_section(rva, resource_leaves)
        place(SectionData(".rsrc", blob, len(blob), SECTION_RDATA))
        directories[2] = (rva, len(blob))

    if spec.load_config_size:
        rva = rva_cursor
        blob = struct.pack("<I", spec.load_config_size)
        blob += b"\x00" * max(0, spec.load_config_size - len(blob))
        place(SectionData(".ldcfg", blob, len(blob), SECTION_RDATA))
        directories[10] = (rva, spec.load_config_size)

    # File layout.
    header_raw_size = 0x40 + 4 + 20 + opt_size + 40 * len(placed)
    size_of_headers = spec.size_of_headers
    if size_of_headers is None:
        size_of_headers = _align(header_raw_size, spec.file_alignment)

    file_cursor = _align(header_raw_size, spec.file_alignment)
    raw_offsets: list[int] = []
    for section, _ in placed:
        raw_offsets.append(file_cursor)
        file_cursor = _align(file_cursor + len(section.data), spec.file_alignment)

    size_of_image = spec.size_of_image
    if size_of_image is None:
        size_of_image = _align(rva_cursor, spec.section_alignment)

    machine = spec.machine
    if machine is None:
        machine = 0x8664 if spec.pe32_plus else 0x14C
    image_base = spec.image_base
    if image_base is None:
        image_base = 0x140000000 if spec.pe32_plus else 0x400000

    size_of_code = spec.size_of_code
    if size_of_code is None:
        size_of_code = sum(len(s.data) for s, _ in placed if s.characteristics & 0x20)
    size_of_init_data = spec.size_of_initialized_data
    if size_of_init_data is None:
        size_of_init_data = sum(len(s.data) for s, _ in placed if s.characteristics & 0x40)

    base_of_code = spec.base_of_code
    if base_of_code is None:
        base_of_code = code_rva if code_rva is not None else 0
    if spec.pe32_plus:
        base_of_data = 0
    else:
        base_of_data = spec.base_of_data
        if base_of_data is None:
            base_of_data = data_rva if data_rva is not None else 0

    if placed:
        file_size = max(raw_offsets[-1] + len(placed[-1][0].data), header_raw_size)
    else:
        file_size = _align(header_raw_size, spec.file_alignment)
    out = bytearray(file_size)

    # DOS header: signature and e_lfanew only.
    out[0:2] = b"MZ"
    struct.pack_into("<I", out, 0x3C, 0x40)

    pe_off = 0x40
    out[pe_off:pe_off + 4] = b"PE\x00\x00"
    struct.pack_into(
        "<HHIIIHH", out, pe_off + 4,
        machine, len(placed), 0, 0, 0, opt_size, spec.characteristics,
    )

    opt = pe_off + 24
    magic = 0x20B if spec.pe32_plus else 0x10B
    struct.pack_into(
        "<HBBIIIII", out, opt,
        magic,
        spec.major_linker_version, spec.minor_linker_version,
        size_of_code, size_of_init_data, spec.size_of_uninitialized_data,
        entry_point, base_of_code,
    )
    if spec.pe32_plus:
        struct.pack_into("<Q", out, opt + 24, image_base)
    else:
        struct.pack_into("<II", out, opt + 24, base_of_data, image_base)
    struct.pack_into(
        "<IIHHHHHHIIIIHH", out, opt + 32,
        spec.section_alignment, spec.file_alignment,
        spec.major_os_version, spec.minor_os_version,
        spec.major_image_version, spec.minor_image_version,
        spec.major_subsystem_version, spec.minor_subsystem_version,
        0,  # Win32VersionValue
        size_of_image, size_of_headers, spec.checksum,
        spec.subsystem, spec.dll_characteristics,
    )
    if spec.pe32_plus:
        struct.pack_into(
            "<QQQQII", out, opt + 72,
            spec.size_of_stack_reserve, spec.size_of_stack_commit,
            spec.size_of_heap_reserve, spec.size_of_heap_commit,
            spec.loader_flags, spec.number_of_rva_and_sizes,
        )
        dd_off = opt + 112
    else:
        struct.pack_into(
            "<IIIIII", out, opt + 72,
            spec.size_of_stack_reserve, spec.size_of_stack_commit,
            spec.size_of_heap_reserve, spec.size_of_heap_commit,
            spec.loader_flags, spec.number_of_rva_and_sizes,
        )
        dd_off = opt + 96
    for idx in range(16):
        rva, size = directories.get(idx, (0, 0))
        struct.pack_into("<II", out, dd_off + idx * 8, rva, size)

    table_off = opt + opt_size
    for i, (section, rva) in enumerate(placed):
        name_bytes = section.name.encode("ascii")[:8].ljust(8, b"\x00")
        struct.pack_into(
            "<8sIIIIIIHHI", out, table_off + i * 40,
            name_bytes, section.virtual_size or 0, rva,
            len(section.data), raw_offsets[i],
            0, 0, 0, 0, section.characteristics,
        )

    for i, (section, _) in enumerate(placed):
        out[raw_offsets[i]:raw_offsets[i] + len(section.data)] = section.data

    header = {
        "Machine": machine,
        "SizeOfOptionalHeader": opt_size,
        "Characteristics": spec.characteristics,
        "MajorLinkerVersion": spec.major_linker_version,
        "MinorLinkerVersion": spec.minor_linker_version,
        "SizeOfCode": size_of_code,
        "SizeOfInitializedData": size_of_init_data,
        "SizeOfUninitializedData": spec.size_of_uninitialized_data,
        "AddressOfEntryPoint": entry_point,
        "BaseOfCode": base_of_code,
        "BaseOfData": base_of_data,
        "ImageBase": image_base,
        "SectionAlignment": spec.section_alignment,
        "FileAlignment": spec.file_alignment,
        "MajorOperatingSystemVersion": spec.major_os_version,
        "MinorOperatingSystemVersion": spec.minor_os_version,
        "MajorImageVersion": spec.major_image_version,
        "MinorImageVersion": spec.minor_image_version,
        "MajorSubsystemVersion": spec.major_subsystem_version,
        "MinorSubsystemVersion": spec.minor_subsystem_version,
        "SizeOfImage": size_of_image,
        "SizeOfHeaders": size_of_headers,
        "CheckSum": spec.checksum,
        "Subsystem": spec.subsystem,
        "DllCharacteristics": spec.dll_characteristics,
        "SizeOfStackReserve": spec.size_of_stack_reserve,
        "SizeOfStackCommit": spec.size_of_stack_commit,
        "SizeOfHeapReserve": spec.size_of_heap_reserve,
        "SizeOfHeapCommit": spec.size_of_heap_commit,
        "LoaderFlags": spec.loader_flags,
        "NumberOfRvaAndSizes": spec.number_of_rva_and_sizes,
    }

    return BuiltPe(
        data=bytes(out),
        header=header,
        sections=[s for s, _ in placed],
        import_table=import_summary,
        export_count=spec.export_count,
        resources=[blob for _, _, blob in resource_leaves],
        load_config_size=spec.load_config_size,
        version_entry_count=(len(spec.version_strings) + 1) if spec.version_strings else 0,
    )
