"""Corpus ingestion, size partitioning, and stratified splitting.

A corpus is a flat list of labeled sample records plus provenance
counters for everything that was excluded (non-PE files, unlabeled
files, content duplicates). Exclusion never aborts ingestion; it is
counted and reported so dataset accounting always balances.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import EmptyCorpus, MissingRoot, SchemaMismatch
from ..pe.batch import sample_id_of
from ..pe.parser import has_pe_signature

LABEL_MODE_SUBDIR = "per-family-subdirectory"
LABEL_MODE_MANIFEST = "manifest-file"

ROLE_MALWARE = "malware"
ROLE_BENIGN = "benign"

SPLIT_TRAIN = "train"
SPLIT_VALIDATION = "validation"
SPLIT_TEST = "test"
SPLIT_UNASSIGNED = "unassigned"

MANIFEST_HEADER: tuple[str, ...] = (
    "sampleId", "sourcePath", "family", "role", "split")

DEFAULT_SIZE_THRESHOLD = 100
DEFAULT_TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    source_path: str
    family: str
    role: str = ROLE_MALWARE
    split: str = SPLIT_UNASSIGNED


@dataclass
class Corpus:
    records: list[SampleRecord] = field(default_factory=list)
    provenance: dict[str, int] = field(default_factory=dict)

    @property
    def family_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rec in self.records:
            counts[rec.family] = counts.get(rec.family, 0) + 1
        return counts

    @property
    def families(self) -> list[str]:
        return sorted(self.family_counts)

    def __len__(self) -> int:
        return len(self.records)


def _read_label_manifest(manifest_path: Path, root: Path) -> dict[str, str]:
    """Map resolved file path -> family from a two-column labeling CSV."""
    labels: dict[str, str] = {}
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return labels
        try:
            path_col = header.index("sourcePath")
            family_col = header.index("family")
        except ValueError as exc:
            raise SchemaMismatch(
                f"{manifest_path}: labeling manifest needs sourcePath and family columns"
            ) from exc
        for row in reader:
            if len(row) <= max(path_col, family_col):
                continue
            raw = Path(row[path_col])
            resolved = raw if raw.is_absolute() else root / raw
            labels[str(resolved)] = row[family_col].strip()
    return labels


def ingest(root_dir: str | Path,
           label_mode: str = LABEL_MODE_SUBDIR,
           role: str = ROLE_MALWARE,
           manifest_path: str | Path | None = None,
           require_pe: bool = True) -> Corpus:
    """Walk a sample tree into a Corpus.

    Labeling is either the immediate parent directory name or an explicit
    manifest CSV (sourcePath, family). Non-PE files, files without a
    label, and content duplicates are excluded and tallied in provenance
    under "not PE" / "unlabeled" / "duplicate".
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise MissingRoot(f"{root} is not a directory")
    if label_mode not in (LABEL_MODE_SUBDIR, LABEL_MODE_MANIFEST):
        raise ValueError(f"unknown label mode {label_mode!r}")

    manifest_labels: dict[str, str] = {}
    if label_mode == LABEL_MODE_MANIFEST:
        if manifest_path is None:
            raise ValueError("manifest-file labeling requires manifest_path")
        manifest_labels = _read_label_manifest(Path(manifest_path), root)

    corpus = Corpus()
    seen_ids: set[str] = set()
    files = sorted(p for p in root.rglob("*") if p.is_file())
    if manifest_path is not None:
        manifest_path = Path(manifest_path)
        files = [p for p in files if p != manifest_path]

    for path in files:
        if label_mode == LABEL_MODE_SUBDIR:
            family = path.parent.name if path.parent != root else ""
        else:
            family = manifest_labels.get(str(path), "")
        if not family:
            corpus.provenance["unlabeled"] = corpus.provenance.get("unlabeled", 0) + 1
            continue

        data = path.read_bytes()
        if require_pe and not has_pe_signature(data):
            corpus.provenance["not PE"] = corpus.provenance.get("not PE", 0) + 1
            continue

        sample_id = sample_id_of(data)
        if sample_id in seen_ids:
            corpus.provenance["duplicate"] = corpus.provenance.get("duplicate", 0) + 1
            continue
        seen_ids.add(sample_id)
        corpus.records.append(SampleRecord(
            sample_id=sample_id, source_path=str(path),
            family=family, role=role))

    if not corpus.records:
        raise EmptyCorpus(f"no usable samples under {root}")
    return corpus


def merge_corpora(*corpora: Corpus) -> Corpus:
    """Concatenate corpora, deduplicating by sampleId (first kept)."""
    merged = Corpus()
    seen: set[str] = set()
    for corpus in corpora:
        for rec in corpus.records:
            if rec.sample_id in seen:
                merged.provenance["duplicate"] = (
                    merged.provenance.get("duplicate", 0) + 1)
                continue
            seen.add(rec.sample_id)
            merged.records.append(rec)
        for reason, count in corpus.provenance.items():
            merged.provenance[reason] = merged.provenance.get(reason, 0) + count
    return merged


def partition_by_size(corpus: Corpus,
                      threshold: int = DEFAULT_SIZE_THRESHOLD
                      ) -> tuple[Corpus, Corpus]:
    """Split by family size: strictly more than `threshold` samples = large."""
    if not corpus.records:
        raise EmptyCorpus("cannot partition an empty corpus")
    counts = corpus.family_counts
    large = Corpus(records=[r for r in corpus.records
                            if counts[r.family] > threshold])
    small = Corpus(records=[r for r in corpus.records
                            if counts[r.family] <= threshold])
    return large, small


@dataclass
class SplitResult:
    train: list[SampleRecord]
    validation: list[SampleRecord]
    warnings: list[str] = field(default_factory=list)


def stratified_split(corpus: Corpus,
                     train_fraction: float = DEFAULT_TRAIN_FRACTION,
                     seed: int = 0) -> SplitResult:
    """Per-family split, deterministic for a fixed seed.

    Each family keeps at least one sample on each side; a single-sample
    family goes wholly to train with a recorded warning.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    if not corpus.records:
        raise EmptyCorpus("cannot split an empty corpus")

    by_family: dict[str, list[SampleRecord]] = {}
    for rec in corpus.records:
        by_family.setdefault(rec.family, []).append(rec)

    result = SplitResult(train=[], validation=[])
    for family in sorted(by_family):
        members = sorted(by_family[family], key=lambda r: r.sample_id)
        rng = random.Random(f"{seed}:{family}")
        rng.shuffle(members)
        n = len(members)
        if n == 1:
            result.warnings.append(
                f"family {family!r} has a single sample; assigned wholly to train")
            result.train.append(replace(members[0], split=SPLIT_TRAIN))
            continue
        n_train = min(max(int(n * train_fraction), 1), n - 1)
        result.train.extend(
            replace(r, split=SPLIT_TRAIN) for r in members[:n_train])
        result.validation.extend(
            replace(r, split=SPLIT_VALIDATION) for r in members[n_train:])
    return result


def write_corpus_manifest(path: str | Path, corpus: Corpus) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for rec in corpus.records:
            writer.writerow([rec.sample_id, rec.source_path, rec.family,
                             rec.role, rec.split])
        for reason in sorted(corpus.provenance):
            writer.writerow([f"#excluded:{reason}", "", "", "",
                             corpus.provenance[reason]])


def read_corpus_manifest(path: str | Path) -> Corpus:
    corpus = Corpus()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != MANIFEST_HEADER:
            raise SchemaMismatch(f"{path}: not a corpus manifest")
        for row in reader:
            if row and row[0].startswith("#excluded:"):
                corpus.provenance[row[0].split(":", 1)[1]] = int(row[4])
                continue
            corpus.records.append(SampleRecord(
                sample_id=row[0], source_path=row[1], family=row[2],
                role=row[3], split=row[4]))
    return corpus
