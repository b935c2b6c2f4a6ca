import csv

import pytest

from binsight.corpus import (
    LABEL_MODE_MANIFEST,
    ROLE_BENIGN,
    SPLIT_TRAIN,
    SPLIT_VALIDATION,
    Corpus,
    SampleRecord,
    ingest,
    merge_corpora,
    partition_by_size,
    read_corpus_manifest,
    stratified_split,
    write_corpus_manifest,
)
from binsight.errors import EmptyCorpus, MissingRoot, SchemaMismatch

from conftest import make_pe_bytes


def make_corpus(family_sizes: dict[str, int]) -> Corpus:
    records = []
    for family, size in family_sizes.items():
        for i in range(size):
            records.append(SampleRecord(
                sample_id=f"{family}-{i:04d}",
                source_path=f"/src/{family}/{i}.exe",
                family=family))
    return Corpus(records=records)


def test_ingest_subdir_labels_and_provenance(family_tree):
    corpus = ingest(family_tree)
    assert len(corpus) == 5
    assert corpus.family_counts == {"A": 3, "B": 2}
    assert corpus.families == ["A", "B"]
    # notes.txt is not a PE; dup_of_a0.exe repeats A/sample0 content.
    assert corpus.provenance == {"not PE": 1, "duplicate": 1}
    roles = {rec.role for rec in corpus.records}
    assert roles == {"malware"}


def test_ingest_role_passthrough(family_tree):
    corpus = ingest(family_tree, role=ROLE_BENIGN)
    assert {rec.role for rec in corpus.records} == {"benign"}


def test_ingest_files_at_root_are_unlabeled(tmp_path):
    (tmp_path / "loose.exe").write_bytes(make_pe_bytes(checksum=1))
    (tmp_path / "fam").mkdir()
    (tmp_path / "fam" / "ok.exe").write_bytes(make_pe_bytes(checksum=2))
    corpus = ingest(tmp_path)
    assert len(corpus) == 1
    assert corpus.provenance == {"unlabeled": 1}


def test_ingest_manifest_labels(tmp_path):
    (tmp_path / "x.exe").write_bytes(make_pe_bytes(checksum=1))
    (tmp_path / "y.exe").write_bytes(make_pe_bytes(checksum=2))
    (tmp_path / "z.exe").write_bytes(make_pe_bytes(checksum=3))
    manifest = tmp_path / "labels.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sourcePath", "family"])
        writer.writerow(["x.exe", "famA"])
        writer.writerow([str(tmp_path / "y.exe"), "famB"])
        # z.exe intentionally missing -> unlabeled

    corpus = ingest(tmp_path, label_mode=LABEL_MODE_MANIFEST,
                    manifest_path=manifest)
    assert corpus.family_counts == {"famA": 1, "famB": 1}
    assert corpus.provenance == {"unlabeled": 1}


def test_ingest_manifest_requires_columns(tmp_path):
    (tmp_path / "f").mkdir()
    (tmp_path / "f" / "x.exe").write_bytes(make_pe_bytes())
    manifest = tmp_path / "labels.csv"
    manifest.write_text("path,label\nx.exe,famA\n")
    with pytest.raises(SchemaMismatch):
        ingest(tmp_path, label_mode=LABEL_MODE_MANIFEST, manifest_path=manifest)


def test_ingest_missing_root_and_empty(tmp_path):
    with pytest.raises(MissingRoot):
        ingest(tmp_path / "nope")
    (tmp_path / "only" ).mkdir()
    (tmp_path / "only" / "readme.txt").write_text("hello")
    with pytest.raises(EmptyCorpus):
        ingest(tmp_path)


def test_ingest_unknown_label_mode(family_tree):
    with pytest.raises(ValueError):
        ingest(family_tree, label_mode="telepathy")


def test_ingest_is_deterministic(family_tree):
    a = ingest(family_tree)
    b = ingest(family_tree)
    assert a.records == b.records


def test_merge_corpora_dedups_by_sample_id():
    a = make_corpus({"A": 2})
    a.provenance["not PE"] = 1
    b = make_corpus({"B": 2})
    b.records.append(a.records[0])  # overlap
    merged = merge_corpora(a, b)
    assert len(merged) == 4
    assert merged.provenance == {"not PE": 1, "duplicate": 1}
    assert merged.family_counts == {"A": 2, "B": 2}


def test_partition_strictly_greater_than_threshold():
    corpus = make_corpus({"big": 101, "edge": 100, "tiny": 3})
    large, small = partition_by_size(corpus, threshold=100)
    assert large.family_counts == {"big": 101}
    assert small.family_counts == {"edge": 100, "tiny": 3}
    with pytest.raises(EmptyCorpus):
        partition_by_size(Corpus())


def test_stratified_split_fractions_and_floor():
    corpus = make_corpus({"a": 10, "b": 5, "c": 2})
    result = stratified_split(corpus, train_fraction=0.8, seed=0)
    train_counts = Corpus(records=result.train).family_counts
    val_counts = Corpus(records=result.validation).family_counts
    assert train_counts == {"a": 8, "b": 4, "c": 1}
    assert val_counts == {"a": 2, "b": 1, "c": 1}
    assert not result.warnings
    assert {r.split for r in result.train} == {SPLIT_TRAIN}
    assert {r.split for r in result.validation} == {SPLIT_VALIDATION}


def test_stratified_split_no_sample_lost_or_duplicated():
    corpus = make_corpus({"a": 13, "b": 7, "c": 4})
    result = stratified_split(corpus, seed=3)
    ids = [r.sample_id for r in result.train + result.validation]
    assert sorted(ids) == sorted(r.sample_id for r in corpus.records)
    assert len(set(ids)) == len(ids)


def test_stratified_split_deterministic_and_seed_sensitive():
    corpus = make_corpus({"a": 20, "b": 20})
    r1 = stratified_split(corpus, seed=5)
    r2 = stratified_split(corpus, seed=5)
    assert [r.sample_id for r in r1.train] == [r.sample_id for r in r2.train]
    r3 = stratified_split(corpus, seed=6)
    assert ([r.sample_id for r in r1.train]
            != [r.sample_id for r in r3.train])


def test_stratified_split_insensitive_to_record_order():
    corpus = make_corpus({"a": 9, "b": 6})
    shuffled = Corpus(records=list(reversed(corpus.records)))
    r1 = stratified_split(corpus, seed=1)
    r2 = stratified_split(shuffled, seed=1)
    assert sorted(r.sample_id for r in r1.train) == sorted(
        r.sample_id for r in r2.train)


def test_stratified_split_single_sample_family_warns():
    corpus = make_corpus({"solo": 1, "duo": 2})
    result = stratified_split(corpus)
    assert any("solo" in w for w in result.warnings)
    train_families = {r.family for r in result.train}
    assert "solo" in train_families
    assert Corpus(records=result.train).family_counts["duo"] == 1
    assert Corpus(records=result.validation).family_counts["duo"] == 1


def test_stratified_split_rejects_bad_fraction():
    corpus = make_corpus({"a": 4})
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            stratified_split(corpus, train_fraction=bad)
    with pytest.raises(EmptyCorpus):
        stratified_split(Corpus())


def test_manifest_round_trip(tmp_path):
    corpus = make_corpus({"a": 3, "b": 2})
    corpus.provenance = {"not PE": 4, "duplicate": 1}
    path = tmp_path / "corpus.csv"
    write_corpus_manifest(path, corpus)
    loaded = read_corpus_manifest(path)
    assert loaded.records == corpus.records
    assert loaded.provenance == corpus.provenance


def test_manifest_rejects_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(SchemaMismatch):
        read_corpus_manifest(path)
