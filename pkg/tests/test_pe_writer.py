"""Structural checks of the PE builder against hand-computed offsets.

These pin the builder's byte layout independently of the parser, so the
two sides can serve as each other's oracle without shared assumptions.
"""

import struct

from binsight.pe.writer import PeFileSpec, SectionData, build_pe
from binsight.pe.writer import SECTION_CODE


def test_default_pe32_layout_by_hand():
    built = build_pe(PeFileSpec())
    data = built.data

    assert data[0:2] == b"MZ"
    assert struct.unpack_from("<I", data, 0x3C)[0] == 0x40
    assert data[0x40:0x44] == b"PE\x00\x00"

    # COFF: machine, section count, optional-header size, characteristics.
    assert struct.unpack_from("<H", data, 0x44)[0] == 0x14C
    assert struct.unpack_from("<H", data, 0x46)[0] == 1
    assert struct.unpack_from("<H", data, 0x44 + 16)[0] == 0xE0
    assert struct.unpack_from("<H", data, 0x44 + 18)[0] == 0x0102

    opt = 0x58
    assert struct.unpack_from("<H", data, opt)[0] == 0x10B
    assert struct.unpack_from("<I", data, opt + 32)[0] == 0x1000  # section align
    assert struct.unpack_from("<I", data, opt + 36)[0] == 0x200   # file align

    # Section table sits right after the 0xE0-byte optional header.
    table = opt + 0xE0
    assert data[table:table + 8].rstrip(b"\x00") == b".text"
    virtual_size, rva, raw_size, raw_ptr = struct.unpack_from("<IIII", data, table + 8)
    assert virtual_size == 64
    assert rva == 0x1000
    assert raw_size == 64
    # header bytes are 0x40 + 4 + 20 + 0xE0 + 40 = 352, aligned up to 512
    assert raw_ptr == 512
    assert data[512:512 + 64] == b"\xc3" * 64
    assert len(data) == 512 + 64


def test_explicit_scalars_written_verbatim():
    built = build_pe(PeFileSpec(checksum=0xDEAD, subsystem=2,
                                major_image_version=7, minor_image_version=9))
    data = built.data
    opt = 0x58
    assert struct.unpack_from("<H", data, opt + 44)[0] == 7   # major image ver
    assert struct.unpack_from("<H", data, opt + 46)[0] == 9   # minor image ver
    assert struct.unpack_from("<I", data, opt + 64)[0] == 0xDEAD  # checksum
    assert struct.unpack_from("<H", data, opt + 68)[0] == 2   # subsystem
    assert built.header["CheckSum"] == 0xDEAD
    assert built.header["Subsystem"] == 2


def test_pe32_plus_magic_and_image_base():
    built = build_pe(PeFileSpec(pe32_plus=True))
    data = built.data
    opt = 0x58
    assert struct.unpack_from("<H", data, 0x44 + 16)[0] == 0xF0
    assert struct.unpack_from("<H", data, opt)[0] == 0x20B
    assert struct.unpack_from("<Q", data, opt + 24)[0] == 0x140000000
    assert built.header["BaseOfData"] == 0


def test_section_raw_offsets_respect_file_alignment():
    built = build_pe(PeFileSpec(sections=(
        SectionData(".text", b"\xc3" * 100, characteristics=SECTION_CODE),
        SectionData(".data", b"\xab" * 700),
        SectionData(".rdata", b"\xcd" * 3),
    )))
    data = built.data
    table = 0x58 + 0xE0
    offsets = []
    for i in range(3):
        raw_size, raw_ptr = struct.unpack_from("<II", data, table + i * 40 + 16)
        offsets.append((raw_ptr, raw_size))
    assert offsets[0][0] % 0x200 == 0
    assert offsets[1][0] == offsets[0][0] + 0x200      # 100 -> one block
    assert offsets[2][0] == offsets[1][0] + 0x400      # 700 -> two blocks
    assert data[offsets[2][0]:offsets[2][0] + 3] == b"\xcd" * 3


def test_built_record_resolves_virtual_sizes():
    built = build_pe(PeFileSpec(sections=(
        SectionData(".a", b"\x01" * 10),
        SectionData(".b", b"\x02" * 20, virtual_size=4096),
    )))
    assert [s.virtual_size for s in built.sections[:2]] == [10, 4096]
