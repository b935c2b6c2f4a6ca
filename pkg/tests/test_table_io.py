import csv

import pytest

from binsight.errors import MissingRoot, SchemaMismatch
from binsight.pe import (
    TABLE_HEADER,
    extract_directory,
    extract_file,
    read_feature_table,
    write_feature_table,
    write_skip_manifest,
)

from conftest import make_pe_bytes


def test_table_header_shape():
    assert TABLE_HEADER[:3] == ("sampleId", "sourcePath", "label")
    assert len(TABLE_HEADER) == 57


def test_round_trip_is_exact(tmp_path):
    sample = tmp_path / "x.exe"
    sample.write_bytes(make_pe_bytes(checksum=11))
    vec = extract_file(sample, label="famA")

    table = tmp_path / "features.csv"
    write_feature_table(table, [vec])
    (loaded,) = read_feature_table(table)

    assert loaded.values == vec.values  # ints exact, floats repr-round-trip
    assert loaded.sample_id == vec.sample_id
    assert loaded.source_path == str(sample)
    assert loaded.label == "famA"


def test_unlabeled_rows_round_trip_as_none(tmp_path):
    sample = tmp_path / "x.exe"
    sample.write_bytes(make_pe_bytes())
    vec = extract_file(sample)
    table = tmp_path / "t.csv"
    write_feature_table(table, [vec])
    (loaded,) = read_feature_table(table)
    assert loaded.label is None


def test_foreign_header_is_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    with open(bad, "w", newline="") as fh:
        csv.writer(fh).writerows([["a", "b"], ["1", "2"]])
    with pytest.raises(SchemaMismatch):
        read_feature_table(bad)


def test_extract_directory_labels_and_skips(family_tree):
    vectors, skips = extract_directory(family_tree)
    assert len(vectors) == 6  # duplicate content still yields its own row here
    labels = sorted(v.label for v in vectors)
    assert labels == ["A", "A", "A", "B", "B", "B"]
    assert len(skips) == 1
    assert skips[0][0].endswith("notes.txt")
    assert skips[0][1] == "NotPe"


def test_extract_directory_is_sorted_and_parallel_equivalent(family_tree):
    serial, _ = extract_directory(family_tree, workers=1)
    parallel, _ = extract_directory(family_tree, workers=3)
    assert [v.sample_id for v in serial] == [v.sample_id for v in parallel]
    assert [v.source_path for v in serial] == sorted(v.source_path for v in serial)


def test_missing_root_raises(tmp_path):
    with pytest.raises(MissingRoot):
        extract_directory(tmp_path / "nope")


def test_skip_manifest_format(tmp_path):
    path = tmp_path / "skips.csv"
    write_skip_manifest(path, [("/a/b.txt", "NotPe"), ("/c.bin", "Truncated")])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["sourcePath", "errorKind"]
    assert rows[1:] == [["/a/b.txt", "NotPe"], ["/c.bin", "Truncated"]]
