"""Binary-to-grayscale-image conversion and PNG encoding.

A file's bytes become row-major 8-bit pixels at a fixed width (default
256); the last row is zero-padded. The PNG encoder is deliberately
minimal and fully deterministic: 8-bit grayscale, non-interlaced, filter
0 on every scanline, fixed zlib level, and a ``binsight:len`` text chunk
recording the pre-padding byte count so a decoder can recover the exact
original content without a sidecar file.
"""

from __future__ import annotations

import csv
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInput, InputTooLarge, MissingRoot
from .pe.batch import sample_id_of

DEFAULT_WIDTH = 256
DEFAULT_MAX_BYTES = 64 * 1024 * 1024

LENGTH_KEYWORD = b"binsight:len"

MANIFEST_HEADER: tuple[str, ...] = (
    "sourcePath", "outputPath", "width", "height", "originalLength", "sampleId")

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6  # fixed so identical input always yields identical bytes


@dataclass(frozen=True)
class GrayscaleImage:
    width: int
    height: int
    pixels: bytes  # row-major, len == width * height
    original_length: int

    def __post_init__(self):
        if len(self.pixels) != self.width * self.height:
            raise ValueError("pixel buffer does not match declared dimensions")


@dataclass(frozen=True)
class ConversionRecord:
    source_path: str
    output_path: str
    width: int
    height: int
    original_length: int
    sample_id: str


def bytes_to_image(data: bytes, width: int = DEFAULT_WIDTH) -> GrayscaleImage:
    """Lay out bytes as a width-column grayscale image, zero-padding the tail."""
    if len(data) == 0:
        raise EmptyInput("cannot image an empty byte string")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    height = -(-len(data) // width)  # ceil division
    padded = data + b"\x00" * (width * height - len(data))
    return GrayscaleImage(width=width, height=height, pixels=padded,
                          original_length=len(data))


def _chunk(tag: bytes, payload: bytes) -> bytes:
    return (struct.pack(">I", len(payload)) + tag + payload
            + struct.pack(">I", zlib.crc32(tag + payload)))


def encode_png(image: GrayscaleImage) -> bytes:
    """Serialize to PNG: 8-bit grayscale, color type 0, non-interlaced."""
    ihdr = struct.pack(">IIBBBBB", image.width, image.height, 8, 0, 0, 0, 0)
    rows = np.frombuffer(image.pixels, dtype=np.uint8).reshape(
        image.height, image.width)
    filtered = np.empty((image.height, image.width + 1), dtype=np.uint8)
    filtered[:, 0] = 0  # filter type None on every scanline
    filtered[:, 1:] = rows
    idat = zlib.compress(filtered.tobytes(), _ZLIB_LEVEL)
    text = LENGTH_KEYWORD + b"\x00" + str(image.original_length).encode("ascii")
    return (_PNG_SIGNATURE
            + _chunk(b"IHDR", ihdr)
            + _chunk(b"tEXt", text)
            + _chunk(b"IDAT", idat)
            + _chunk(b"IEND", b""))


def convert_bytes(data: bytes, width: int = DEFAULT_WIDTH) -> bytes:
    return encode_png(bytes_to_image(data, width))


def convert_file(input_path: str | Path, output_path: str | Path,
                 width: int = DEFAULT_WIDTH,
                 max_bytes: int = DEFAULT_MAX_BYTES) -> ConversionRecord:
    """Convert one file to a PNG on disk and describe the result."""
    input_path = Path(input_path)
    output_path = Path(output_path)
    data = input_path.read_bytes()
    if len(data) == 0:
        raise EmptyInput(f"{input_path} is empty")
    if len(data) > max_bytes:
        raise InputTooLarge(
            f"{input_path} is {len(data)} bytes, over the {max_bytes}-byte limit")
    image = bytes_to_image(data, width)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_bytes(encode_png(image))
    return ConversionRecord(
        source_path=str(input_path), output_path=str(output_path),
        width=image.width, height=image.height,
        original_length=image.original_length, sample_id=sample_id_of(data))


def convert_directory(
    input_dir: str | Path,
    output_dir: str | Path,
    width: int = DEFAULT_WIDTH,
    max_bytes: int = DEFAULT_MAX_BYTES,
) -> tuple[list[ConversionRecord], list[tuple[str, str]]]:
    """Convert every file under input_dir, mirroring its directory layout.

    Each source file maps to <output_dir>/<relative path>.png. Empty or
    oversized files are skipped and reported, not fatal.
    """
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise MissingRoot(f"{input_dir} is not a directory")
    output_dir = Path(output_dir)
    records: list[ConversionRecord] = []
    skips: list[tuple[str, str]] = []
    for path in sorted(p for p in input_dir.rglob("*") if p.is_file()):
        rel = path.relative_to(input_dir)
        target = output_dir / rel.parent / (rel.name + ".png")
        try:
            records.append(convert_file(path, target, width, max_bytes))
        except (EmptyInput, InputTooLarge) as exc:
            skips.append((str(path), type(exc).__name__))
        except OSError as exc:
            skips.append((str(path), f"IoError:{exc.__class__.__name__}"))
    return records, skips


def write_image_manifest(path: str | Path,
                         records: list[ConversionRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for rec in records:
            writer.writerow([rec.source_path, rec.output_path, rec.width,
                             rec.height, rec.original_length, rec.sample_id])
