"""Batch feature extraction and the feature-table CSV format.

The on-disk table is plain UTF-8 CSV: header row ``sampleId, sourcePath,
label`` followed by the 54 canonical feature names, then one row per
sample. Floats are serialized with ``repr`` so they round-trip exactly;
integer features are written and re-read as ints. The header row doubles
as the schema version: a loader that sees any other header refuses the
file.

Files that fail to parse as PEs are skipped and recorded in a separate
skip manifest (sourcePath, error kind) instead of aborting the batch.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import MissingRoot, PeError, SchemaMismatch
from .features import FEATURE_NAMES, FLOAT_FEATURES, FeatureVector, extract_features
from .parser import parse_pe

TABLE_HEADER: tuple[str, ...] = ("sampleId", "sourcePath", "label") + FEATURE_NAMES
SKIP_HEADER: tuple[str, ...] = ("sourcePath", "errorKind")


def sample_id_of(data: bytes) -> str:
    """Content identity: SHA-256 hex digest of the raw bytes."""
    return hashlib.sha256(data).hexdigest()


def extract_file(path: str | Path, label: str | None = None) -> FeatureVector:
    """Parse one file and return its feature vector.

    Raises the underlying PeError if the file is not a well-formed PE.
    """
    path = Path(path)
    data = path.read_bytes()
    meta = parse_pe(data)
    return extract_features(meta, sample_id=sample_id_of(data),
                            source_path=str(path), label=label)


def _extract_one(args: tuple[str, str | None]) -> tuple[str, FeatureVector | None, str | None]:
    path, label = args
    try:
        return path, extract_file(path, label), None
    except PeError as exc:
        return path, None, type(exc).__name__
    except OSError as exc:
        return path, None, f"IoError:{exc.__class__.__name__}"


def extract_many(
    paths_and_labels: list[tuple[str, str | None]],
    workers: int = 1,
) -> tuple[list[FeatureVector], list[tuple[str, str]]]:
    """Extract features for many files, preserving input order.

    Returns (vectors, skips) where skips is a list of
    (sourcePath, error kind) for files that could not be parsed.
    """
    if workers > 1 and len(paths_and_labels) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_one, paths_and_labels, chunksize=8))
    else:
        results = [_extract_one(item) for item in paths_and_labels]

    vectors: list[FeatureVector] = []
    skips: list[tuple[str, str]] = []
    for path, vec, err in results:
        if vec is not None:
            vectors.append(vec)
        else:
            skips.append((path, err or "UnknownError"))
    return vectors, skips


def extract_directory(
    root: str | Path,
    workers: int = 1,
) -> tuple[list[FeatureVector], list[tuple[str, str]]]:
    """Extract every regular file under root, in sorted path order.

    The immediate parent directory name is attached as the label when the
    file sits below the root; files directly in the root get no label.
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingRoot(f"{root} is not a directory")
    jobs: list[tuple[str, str | None]] = []
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        label = path.parent.name if path.parent != root else None
        jobs.append((str(path), label))
    return extract_many(jobs, workers=workers)


def _format_value(name: str, value: int | float) -> str:
    if name in FLOAT_FEATURES:
        return repr(float(value))
    return str(int(value))


def write_feature_table(path: str | Path, vectors: list[FeatureVector]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_HEADER)
        for vec in vectors:
            row = [vec.sample_id, vec.source_path, vec.label or ""]
            row.extend(_format_value(name, value)
                       for name, value in zip(FEATURE_NAMES, vec.values))
            writer.writerow(row)


def read_feature_table(path: str | Path) -> list[FeatureVector]:
    """Load a feature-table CSV, refusing files with a different schema."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TABLE_HEADER:
            raise SchemaMismatch(
                f"{path}: header does not match the canonical feature schema")
        vectors = []
        for row in reader:
            if len(row) != len(TABLE_HEADER):
                raise SchemaMismatch(
                    f"{path}: row has {len(row)} columns, expected {len(TABLE_HEADER)}")
            values = tuple(
                float(cell) if name in FLOAT_FEATURES else int(cell)
                for name, cell in zip(FEATURE_NAMES, row[3:]))
            vectors.append(FeatureVector(
                values, sample_id=row[0], source_path=row[1],
                label=row[2] or None))
    return vectors


def write_skip_manifest(path: str | Path, skips: list[tuple[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SKIP_HEADER)
        writer.writerows(skips)
