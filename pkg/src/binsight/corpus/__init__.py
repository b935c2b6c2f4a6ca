"""Corpus ingestion, experiment planning, and synthetic data generation."""

from .ingest import (
    DEFAULT_SIZE_THRESHOLD,
    DEFAULT_TRAIN_FRACTION,
    LABEL_MODE_MANIFEST,
    LABEL_MODE_SUBDIR,
    ROLE_BENIGN,
    ROLE_MALWARE,
    SPLIT_TEST,
    SPLIT_TRAIN,
    SPLIT_UNASSIGNED,
    SPLIT_VALIDATION,
    Corpus,
    SampleRecord,
    SplitResult,
    ingest,
    merge_corpora,
    partition_by_size,
    read_corpus_manifest,
    stratified_split,
    write_corpus_manifest,
)
from .plans import (
    BENIGN_CLASS,
    MALWARE_CLASS,
    PLAN_TABLE,
    TECHNIQUE_DL,
    TECHNIQUE_KNN,
    ExperimentPlan,
    make_plan,
    plan_document,
    read_plan_document,
    resolve_plan,
    write_plan,
)
from .synth import SynthSpec, family_names, generate_bodies, spec_from_json, synth_corpus

__all__ = [
    "BENIGN_CLASS",
    "Corpus",
    "DEFAULT_SIZE_THRESHOLD",
    "DEFAULT_TRAIN_FRACTION",
    "ExperimentPlan",
    "LABEL_MODE_MANIFEST",
    "LABEL_MODE_SUBDIR",
    "MALWARE_CLASS",
    "PLAN_TABLE",
    "ROLE_BENIGN",
    "ROLE_MALWARE",
    "SPLIT_TEST",
    "SPLIT_TRAIN",
    "SPLIT_UNASSIGNED",
    "SPLIT_VALIDATION",
    "SampleRecord",
    "SplitResult",
    "SynthSpec",
    "TECHNIQUE_DL",
    "TECHNIQUE_KNN",
    "family_names",
    "generate_bodies",
    "ingest",
    "make_plan",
    "merge_corpora",
    "partition_by_size",
    "plan_document",
    "read_corpus_manifest",
    "read_plan_document",
    "resolve_plan",
    "spec_from_json",
    "stratified_split",
    "synth_corpus",
    "write_corpus_manifest",
    "write_plan",
]
