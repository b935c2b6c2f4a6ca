"""PE (Portable Executable) header parsing.

Reads the COFF and optional headers, the section table, and the import,
export, resource, and load-configuration directories into a
:class:`PeMetadata`. Structural header problems raise :class:`NotPe`,
:class:`Truncated`, or :class:`MalformedHeader`; damaged or unmappable
optional substructures (a single unreadable resource, an import thunk
pointing nowhere) are treated as absent rather than fatal, so one bad
directory never sinks an otherwise valid sample.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import MalformedHeader, NotPe, Truncated
from .entropy import shannon_entropy

PE32_MAGIC = 0x10B
PE32PLUS_MAGIC = 0x20B

_DIR_EXPORT = 0
_DIR_IMPORT = 1
_DIR_RESOURCE = 2
_DIR_LOAD_CONFIG = 10

_RT_VERSION = 16

_MAX_SECTIONS = 256
_MAX_IMPORT_DLLS = 1024
_MAX_THUNKS_PER_DLL = 65536
_MAX_RESOURCE_NODES = 8192


@dataclass(frozen=True)
class SectionInfo:
    """Per-section name, sizes, and raw-data entropy (0 for empty data)."""

    name: str
    raw_size: int
    virtual_size: int
    entropy: float


@dataclass
class PeMetadata:
    """Everything the feature schema needs from one parsed PE."""

    machine: int
    size_of_optional_header: int
    characteristics: int
    major_linker_version: int
    minor_linker_version: int
    size_of_code: int
    size_of_initialized_data: int
    size_of_uninitialized_data: int
    address_of_entry_point: int
    base_of_code: int
    base_of_data: int  # 0 for PE32+ (field absent from the 64-bit header)
    image_base: int
    section_alignment: int
    file_alignment: int
    major_os_version: int
    minor_os_version: int
    major_image_version: int
    minor_image_version: int
    major_subsystem_version: int
    minor_subsystem_version: int
    size_of_image: int
    size_of_headers: int
    checksum: int
    subsystem: int
    dll_characteristics: int
    size_of_stack_reserve: int
    size_of_stack_commit: int
    size_of_heap_reserve: int
    size_of_heap_commit: int
    loader_flags: int
    number_of_rva_and_sizes: int
    pe32_plus: bool = False
    sections: list[SectionInfo] = field(default_factory=list)
    imports: list[tuple[str, int, int]] = field(default_factory=list)
    export_count: int = 0
    resources: list[tuple[int, float]] = field(default_factory=list)
    load_configuration_size: int = 0
    version_info_entry_count: int = 0


def _u16(data: bytes, off: int) -> int | None:
    if off < 0 or off + 2 > len(data):
        return None
    return struct.unpack_from("<H", data, off)[0]


def _u32(data: bytes, off: int) -> int | None:
    if off < 0 or off + 4 > len(data):
        return None
    return struct.unpack_from("<I", data, off)[0]


def _u64(data: bytes, off: int) -> int | None:
    if off < 0 or off + 8 > len(data):
        return None
    return struct.unpack_from("<Q", data, off)[0]


def _cstring(data: bytes, off: int, max_len: int = 512) -> str | None:
    if off < 0 or off >= len(data):
        return None
    chunk = data[off:off + max_len]
    nul = chunk.find(b"\x00")
    if nul < 0:
        return None
    return chunk[:nul].decode("latin-1")


class _RvaMap:
    """RVA to file-offset translation via the section table."""

    def __init__(self, spans: list[tuple[int, int, int, int]], file_len: int):
        # spans: (virtual_address, virtual_span, raw_pointer, raw_size)
        self._spans = spans
        self._file_len = file_len

    def offset(self, rva: int) -> int | None:
        if rva <= 0:
            return None
        for va, span, raw_ptr, raw_size in self._spans:
            if va <= rva < va + span:
                off = raw_ptr + (rva - va)
                if 0 <= off < self._file_len:
                    return off
                return None
        # RVAs inside the header region map to themselves.
        if rva < self._file_len and (not self._spans or rva < self._spans[0][0]):
            return rva
        return None


def has_pe_signature(data: bytes) -> bool:
    """Cheap MZ + PE\\0\\0 check, used to triage files before full parsing."""
    if len(data) < 0x40 or data[:2] != b"MZ":
        return False
    e_lfanew = _u32(data, 0x3C)
    if e_lfanew is None or e_lfanew + 4 > len(data):
        return False
    return data[e_lfanew:e_lfanew + 4] == b"PE\x00\x00"


def parse_pe(data: bytes) -> PeMetadata:
    """Parse raw file content into :class:`PeMetadata`.

    Raises NotPe / Truncated / MalformedHeader for structural problems in
    the mandatory headers. Missing optional structures come back as empty
    lists and zero counts.
    """
    if len(data) < 2 or data[:2] != b"MZ":
        raise NotPe("missing MZ signature")
    if len(data) < 0x40:
        raise Truncated("DOS header truncated")

    e_lfanew = _u32(data, 0x3C)
    assert e_lfanew is not None
    if e_lfanew + 4 > len(data):
        raise MalformedHeader(f"e_lfanew 0x{e_lfanew:x} out of range")
    if data[e_lfanew:e_lfanew + 4] != b"PE\x00\x00":
        raise NotPe("missing PE\\0\\0 signature")

    coff = e_lfanew + 4
    if coff + 20 > len(data):
        raise Truncated("COFF header truncated")
    machine, num_sections, _, _, _, opt_size, characteristics = struct.unpack_from(
        "<HHIIIHH", data, coff)

    opt = coff + 20
    if opt + opt_size > len(data):
        raise Truncated("optional header extends past end of file")
    magic = _u16(data, opt)
    if magic not in (PE32_MAGIC, PE32PLUS_MAGIC):
        raise MalformedHeader(f"unknown optional header magic 0x{magic:x}"
                              if magic is not None else "optional header missing")
    plus = magic == PE32PLUS_MAGIC
    fixed_size = 112 if plus else 96
    if opt + fixed_size > len(data):
        raise Truncated("optional header truncated")

    (_, major_linker, minor_linker, size_of_code, size_of_init, size_of_uninit,
     entry_point, base_of_code) = struct.unpack_from("<HBBIIIII", data, opt)
    if plus:
        base_of_data = 0
        image_base = struct.unpack_from("<Q", data, opt + 24)[0]
    else:
        base_of_data, image_base = struct.unpack_from("<II", data, opt + 24)
    (section_align, file_align,
     major_os, minor_os, major_image, minor_image, major_subsys, minor_subsys,
     _, size_of_image, size_of_headers, checksum,
     subsystem, dll_characteristics) = struct.unpack_from("<IIHHHHHHIIIIHH", data, opt + 32)
    if plus:
        (stack_reserve, stack_commit, heap_reserve, heap_commit,
         loader_flags, num_dirs) = struct.unpack_from("<QQQQII", data, opt + 72)
        dir_off = opt + 112
    else:
        (stack_reserve, stack_commit, heap_reserve, heap_commit,
         loader_flags, num_dirs) = struct.unpack_from("<IIIIII", data, opt + 72)
        dir_off = opt + 96

    def directory(index: int) -> tuple[int, int]:
        if index >= num_dirs:
            return 0, 0
        entry_off = dir_off + index * 8
        if entry_off + 8 > opt + opt_size or entry_off + 8 > len(data):
            return 0, 0
        return struct.unpack_from("<II", data, entry_off)

    if num_sections > _MAX_SECTIONS:
        raise MalformedHeader(f"section count {num_sections} implausible")
    table = opt + opt_size
    if table + num_sections * 40 > len(data):
        raise MalformedHeader(
            f"section table for {num_sections} sections exceeds file size")

    sections: list[SectionInfo] = []
    spans: list[tuple[int, int, int, int]] = []
    for i in range(num_sections):
        off = table + i * 40
        name_raw, vsize, va, raw_size, raw_ptr = struct.unpack_from("<8sIIII", data, off)
        name = name_raw.rstrip(b"\x00").decode("latin-1")
        raw = b""
        if raw_size > 0 and raw_ptr > 0 and raw_ptr < len(data):
            raw = data[raw_ptr:raw_ptr + raw_size]  # clipped at EOF
        sections.append(SectionInfo(name, raw_size, vsize, shannon_entropy(raw)))
        spans.append((va, max(vsize, raw_size), raw_ptr, raw_size))

    rva_map = _RvaMap(spans, len(data))

    meta = PeMetadata(
        machine=machine,
        size_of_optional_header=opt_size,
        characteristics=characteristics,
        major_linker_version=major_linker,
        minor_linker_version=minor_linker,
        size_of_code=size_of_code,
        size_of_initialized_data=size_of_init,
        size_of_uninitialized_data=size_of_uninit,
        address_of_entry_point=entry_point,
        base_of_code=base_of_code,
        base_of_data=base_of_data,
        image_base=image_base,
        section_alignment=section_align,
        file_alignment=file_align,
        major_os_version=major_os,
        minor_os_version=minor_os,
        major_image_version=major_image,
        minor_image_version=minor_image,
        major_subsystem_version=major_subsys,
        minor_subsystem_version=minor_subsys,
        size_of_image=size_of_image,
        size_of_headers=size_of_headers,
        checksum=checksum,
        subsystem=subsystem,
        dll_characteristics=dll_characteristics,
        size_of_stack_reserve=stack_reserve,
        size_of_stack_commit=stack_commit,
        size_of_heap_reserve=heap_reserve,
        size_of_heap_commit=heap_commit,
        loader_flags=loader_flags,
        number_of_rva_and_sizes=num_dirs,
        pe32_plus=plus,
        sections=sections,
    )

    import_rva, import_size = directory(_DIR_IMPORT)
    if import_rva and import_size:
        meta.imports = _parse_imports(data, rva_map, import_rva, plus)

    export_rva, export_size = directory(_DIR_EXPORT)
    if export_rva and export_size:
        meta.export_count = _parse_export_count(data, rva_map, export_rva)

    resource_rva, resource_size = directory(_DIR_RESOURCE)
    if resource_rva and resource_size:
        leaves = _parse_resource_leaves(data, rva_map, resource_rva)
        meta.resources = [
            (size, shannon_entropy(blob)) for _, size, blob in leaves
        ]
        meta.version_info_entry_count = _count_version_entries(leaves)

    lc_rva, lc_size = directory(_DIR_LOAD_CONFIG)
    if lc_rva and lc_size:
        lc_off = rva_map.offset(lc_rva)
        if lc_off is not None:
            declared = _u32(data, lc_off)
            meta.load_configuration_size = declared if declared is not None else 0

    return meta


def _parse_imports(data: bytes, rva_map: _RvaMap, import_rva: int,
                   plus: bool) -> list[tuple[str, int, int]]:
    base = rva_map.offset(import_rva)
    if base is None:
        return []
    entry_size = 8 if plus else 4
    ordinal_flag = 0x8000000000000000 if plus else 0x80000000
    read_entry = _u64 if plus else _u32

    result: list[tuple[str, int, int]] = []
    for index in range(_MAX_IMPORT_DLLS):
        desc = base + index * 20
        if desc + 20 > len(data):
            break
        oft, _, _, name_rva, ft = struct.unpack_from("<IIIII", data, desc)
        if oft == 0 and name_rva == 0 and ft == 0:
            break

        name_off = rva_map.offset(name_rva)
        dll_name = _cstring(data, name_off) if name_off is not None else None
        if dll_name is None:
            dll_name = f"<unreadable:{index}>"

        symbols = 0
        ordinals = 0
        thunk_off = rva_map.offset(oft or ft)
        if thunk_off is not None:
            for t in range(_MAX_THUNKS_PER_DLL):
                value = read_entry(data, thunk_off + t * entry_size)
                if value is None or value == 0:
                    break
                symbols += 1
                if value & ordinal_flag:
                    ordinals += 1
        result.append((dll_name, symbols, ordinals))
    return result


def _parse_export_count(data: bytes, rva_map: _RvaMap, export_rva: int) -> int:
    off = rva_map.offset(export_rva)
    if off is None or off + 40 > len(data):
        return 0
    return struct.unpack_from("<I", data, off + 20)[0]  # NumberOfFunctions


def _parse_resource_leaves(data: bytes, rva_map: _RvaMap,
                           resource_rva: int) -> list[tuple[int, int, bytes]]:
    """Walk the three-level resource tree; returns (type_id, size, bytes)."""
    base = rva_map.offset(resource_rva)
    if base is None:
        return []

    leaves: list[tuple[int, int, bytes]] = []
    budget = [_MAX_RESOURCE_NODES]

    def entries(dir_rel: int) -> list[tuple[int, int, bool]]:
        off = base + dir_rel
        n_named = _u16(data, off + 12)
        n_id = _u16(data, off + 14)
        if n_named is None or n_id is None:
            return []
        out = []
        for i in range(n_named + n_id):
            name_or_id = _u32(data, off + 16 + i * 8)
            target = _u32(data, off + 16 + i * 8 + 4)
            if name_or_id is None or target is None:
                break
            out.append((name_or_id, target & 0x7FFFFFFF, bool(target & 0x80000000)))
        return out

    def walk(dir_rel: int, type_id: int | None, depth: int) -> None:
        if depth > 3 or budget[0] <= 0:
            return
        budget[0] -= 1
        for ident, target, is_dir in entries(dir_rel):
            current_type = type_id if type_id is not None else ident
            if is_dir:
                walk(target, current_type, depth + 1)
            else:
                entry_off = base + target
                rva = _u32(data, entry_off)
                size = _u32(data, entry_off + 4)
                if rva is None or size is None:
                    continue
                blob_off = rva_map.offset(rva)
                blob = b""
                if blob_off is not None:
                    blob = data[blob_off:blob_off + size]
                leaves.append((current_type, size, blob))

    walk(0, None, 1)
    return leaves


def _count_version_entries(leaves: list[tuple[int, int, bytes]]) -> int:
    """Count string-table and translation entries in the first version resource."""
    blob = next((b for t, _, b in leaves if t == _RT_VERSION and b), None)
    if blob is None:
        return 0

    def align4(x: int) -> int:
        return (x + 3) & ~3

    def read_block(off: int, limit: int):
        if off + 6 > limit:
            return None
        length, value_len, value_type = struct.unpack_from("<HHH", blob, off)
        if length < 6 or off + length > limit:
            return None
        # UTF-16 key, NUL-terminated.
        key_end = off + 6
        while key_end + 1 < off + length and blob[key_end:key_end + 2] != b"\x00\x00":
            key_end += 2
        key = blob[off + 6:key_end].decode("utf-16-le", errors="replace")
        value_off = align4(key_end + 2)
        value_bytes = value_len * 2 if value_type == 1 else value_len
        children_off = align4(value_off + value_bytes)
        return key, value_len, value_type, value_off, children_off, off + length

    root = read_block(0, len(blob))
    if root is None or root[0] != "VS_VERSION_INFO":
        return 0

    count = 0
    _, _, _, _, children, end = root
    cursor = children
    for _ in range(64):
        block = read_block(cursor, end)
        if block is None:
            break
        key, _, _, _, inner, block_end = block
        if key == "StringFileInfo":
            table_cursor = inner
            while True:
                table = read_block(table_cursor, block_end)
                if table is None:
                    break
                _, _, _, _, str_cursor, table_end = table
                while True:
                    entry = read_block(str_cursor, table_end)
                    if entry is None:
                        break
                    count += 1
                    str_cursor = align4(entry[5])
                table_cursor = align4(table_end)
        elif key == "VarFileInfo":
            var_cursor = inner
            while True:
                var = read_block(var_cursor, block_end)
                if var is None:
                    break
                count += var[1] // 4  # one entry per translation dword
                var_cursor = align4(var[5])
        cursor = align4(block_end)
        if cursor >= end:
            break
    return count
