"""Experiment plans: which samples train, which test, under which classes.

The eight stock plans cover both corpora pairs and both techniques:

  1  binary      dl    all malware families vs benign
  2  multiclass  dl    every malware family + benign as its own class
  3  binary      dl    all malware families vs benign
  4  multiclass  dl    large malware families + benign
  5  binary      knn   all malware families vs benign
  6  multiclass  knn   large malware families + benign
  7  binary(z)   dl    train large families + benign, test small families
                       + an alternate benign set (held-out families)
  8  binary(z)   knn   same protocol as 7

Plans 7/8 are the zero-day simulations: the malware families seen at
test time never appear in training, and the benign test set comes from a
different source than the benign training set. Both disjointness rules
are enforced here and re-checked by the runner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import InvariantViolation, MissingCorpus
from .ingest import (
    DEFAULT_SIZE_THRESHOLD,
    DEFAULT_TRAIN_FRACTION,
    ROLE_BENIGN,
    SPLIT_TEST,
    SPLIT_TRAIN,
    Corpus,
    SampleRecord,
    partition_by_size,
    stratified_split,
)

PLAN_SCHEMA_VERSION = 1

BENIGN_CLASS = "benign"
MALWARE_CLASS = "malware"

CLASSIFICATION_BINARY = "binary"
CLASSIFICATION_MULTICLASS = "multiclass"

TECHNIQUE_KNN = "knn"
TECHNIQUE_DL = "dl"

#: experimentId -> (classification, technique, large-families-only, zero-day)
PLAN_TABLE: dict[int, tuple[str, str, bool, bool]] = {
    1: (CLASSIFICATION_BINARY, TECHNIQUE_DL, False, False),
    2: (CLASSIFICATION_MULTICLASS, TECHNIQUE_DL, False, False),
    3: (CLASSIFICATION_BINARY, TECHNIQUE_DL, False, False),
    4: (CLASSIFICATION_MULTICLASS, TECHNIQUE_DL, True, False),
    5: (CLASSIFICATION_BINARY, TECHNIQUE_KNN, False, False),
    6: (CLASSIFICATION_MULTICLASS, TECHNIQUE_KNN, True, False),
    7: (CLASSIFICATION_BINARY, TECHNIQUE_DL, True, True),
    8: (CLASSIFICATION_BINARY, TECHNIQUE_KNN, True, True),
}


@dataclass
class ExperimentPlan:
    experiment_id: int
    classification: str
    technique: str
    class_list: tuple[str, ...]
    train: list[SampleRecord]
    test: list[SampleRecord]
    zero_day: bool = False
    split_params: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def class_of(self, record: SampleRecord) -> str:
        """The class label a record carries under this plan."""
        if record.role == ROLE_BENIGN:
            return BENIGN_CLASS
        if self.classification == CLASSIFICATION_BINARY:
            return MALWARE_CLASS
        return record.family

    def verify(self) -> None:
        """Hard disjointness checks; raises InvariantViolation."""
        train_ids = {r.sample_id for r in self.train}
        test_ids = {r.sample_id for r in self.test}
        overlap = train_ids & test_ids
        if overlap:
            raise InvariantViolation(
                f"{len(overlap)} samples appear in both train and test")
        if self.zero_day:
            train_fams = {r.family for r in self.train if r.role != ROLE_BENIGN}
            test_fams = {r.family for r in self.test if r.role != ROLE_BENIGN}
            shared = train_fams & test_fams
            if shared:
                raise InvariantViolation(
                    f"zero-day plan shares malware families: {sorted(shared)}")
        for rec in self.train + self.test:
            if self.class_of(rec) not in self.class_list:
                raise InvariantViolation(
                    f"record {rec.sample_id} maps to class "
                    f"{self.class_of(rec)!r} outside the class list")


def _require(corpus: Corpus | None, name: str) -> Corpus:
    if corpus is None or not corpus.records:
        raise MissingCorpus(f"plan requires a non-empty {name} corpus")
    return corpus


def make_plan(experiment_id: int,
              malware: Corpus | None = None,
              benign: Corpus | None = None,
              benign_alt: Corpus | None = None,
              train_fraction: float = DEFAULT_TRAIN_FRACTION,
              seed: int = 0,
              threshold: int = DEFAULT_SIZE_THRESHOLD) -> ExperimentPlan:
    """Assemble one of the eight stock plans from ingested corpora.

    Plans 1-6 stratify-split the supplied malware and benign corpora;
    plans 7/8 train on every large-family malware sample plus the benign
    corpus and test on every small-family sample plus benign_alt.
    """
    if experiment_id not in PLAN_TABLE:
        raise ValueError(f"experiment id must be 1..8, got {experiment_id}")
    classification, technique, large_only, zero_day = PLAN_TABLE[experiment_id]

    malware = _require(malware, "malware")
    benign = _require(benign, "benign")

    split_params = {
        "trainFraction": train_fraction,
        "seed": seed,
        "threshold": threshold,
    }
    warnings: list[str] = []

    if zero_day:
        benign_alt = _require(benign_alt, "alternate benign (test-side)")
        large, small = partition_by_size(malware, threshold)
        if not large.records:
            raise InvariantViolation(
                f"no family exceeds {threshold} samples; zero-day training set empty")
        if not small.records:
            raise InvariantViolation(
                f"every family exceeds {threshold} samples; zero-day test set empty")
        train = [_with_split(r, SPLIT_TRAIN) for r in large.records]
        train += [_with_split(r, SPLIT_TRAIN) for r in benign.records]
        test = [_with_split(r, SPLIT_TEST) for r in small.records]
        test += [_with_split(r, SPLIT_TEST) for r in benign_alt.records]
        class_list: tuple[str, ...] = (BENIGN_CLASS, MALWARE_CLASS)
        plan = ExperimentPlan(
            experiment_id=experiment_id, classification=classification,
            technique=technique, class_list=class_list,
            train=train, test=test, zero_day=True,
            split_params=split_params, warnings=warnings)
        plan.verify()
        return plan

    selected = malware
    if large_only:
        selected, _ = partition_by_size(malware, threshold)
        if not selected.records:
            raise InvariantViolation(
                f"no malware family exceeds {threshold} samples")

    mal_split = stratified_split(selected, train_fraction, seed)
    ben_split = stratified_split(benign, train_fraction, seed)
    warnings.extend(mal_split.warnings)
    warnings.extend(ben_split.warnings)

    train = mal_split.train + ben_split.train
    test = mal_split.validation + ben_split.validation

    if classification == CLASSIFICATION_BINARY:
        class_list = (BENIGN_CLASS, MALWARE_CLASS)
    else:
        class_list = (BENIGN_CLASS,) + tuple(selected.families)

    plan = ExperimentPlan(
        experiment_id=experiment_id, classification=classification,
        technique=technique, class_list=class_list,
        train=train, test=test, zero_day=False,
        split_params=split_params, warnings=warnings)
    plan.verify()
    return plan


def _with_split(record: SampleRecord, split: str) -> SampleRecord:
    return replace(record, split=split)


def plan_document(plan: ExperimentPlan) -> dict:
    return {
        "schemaVersion": PLAN_SCHEMA_VERSION,
        "experimentId": plan.experiment_id,
        "classification": plan.classification,
        "technique": plan.technique,
        "classList": list(plan.class_list),
        "zeroDay": plan.zero_day,
        "split": plan.split_params,
        "trainSampleIds": [r.sample_id for r in plan.train],
        "testSampleIds": [r.sample_id for r in plan.test],
    }


def write_plan(path: str | Path, plan: ExperimentPlan) -> None:
    Path(path).write_text(
        json.dumps(plan_document(plan), indent=2) + "\n", encoding="utf-8")


def read_plan_document(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schemaVersion") != PLAN_SCHEMA_VERSION:
        raise InvariantViolation(
            f"{path}: unsupported plan schema {doc.get('schemaVersion')!r}")
    return doc


def resolve_plan(doc: dict, corpora: list[Corpus]) -> ExperimentPlan:
    """Rebuild an ExperimentPlan from its JSON form plus ingested corpora.

    Records are matched by sampleId across all supplied corpora; ids in
    the plan that no corpus provides raise MissingCorpus.
    """
    lookup: dict[str, SampleRecord] = {}
    for corpus in corpora:
        for rec in corpus.records:
            lookup.setdefault(rec.sample_id, rec)

    def pick(ids: list[str], split: str) -> list[SampleRecord]:
        out = []
        missing = []
        for sid in ids:
            rec = lookup.get(sid)
            if rec is None:
                missing.append(sid)
            else:
                out.append(_with_split(rec, split))
        if missing:
            raise MissingCorpus(
                f"{len(missing)} plan samples not found in supplied corpora "
                f"(first: {missing[0]})")
        return out

    plan = ExperimentPlan(
        experiment_id=int(doc["experimentId"]),
        classification=doc["classification"],
        technique=doc["technique"],
        class_list=tuple(doc["classList"]),
        train=pick(doc["trainSampleIds"], SPLIT_TRAIN),
        test=pick(doc["testSampleIds"], SPLIT_TEST),
        zero_day=bool(doc["zeroDay"]),
        split_params=dict(doc.get("split") or {}))
    plan.verify()
    return plan
