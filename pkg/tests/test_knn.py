import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binsight.errors import (
    DimensionMismatch,
    EmptyTable,
    KTooLarge,
    SchemaMismatch,
    UnlabeledRow,
)
from binsight.knn import (
    KnnConfig,
    build_index,
    classify,
    euclidean_distance,
    load_index,
    save_index,
    sweep_k,
)
from binsight.pe.features import FEATURE_COUNT, FeatureVector

from oracles import knn_predict

LABELS = ["alpha", "beta", "gamma", "delta", "epsilon"]


def vec(values, label=None, sample_id="") -> FeatureVector:
    values = tuple(values) + (0,) * (FEATURE_COUNT - len(values))
    return FeatureVector(values=values, label=label, sample_id=sample_id)


def random_instance(rng: random.Random, n_rows: int, n_queries: int):
    """Integer-valued features keep squared distances exactly representable,
    so the numpy route and the pure-Python oracle order neighbors
    identically down to the last bit."""
    rows = [[rng.randint(0, 2**20) for _ in range(FEATURE_COUNT)]
            for _ in range(n_rows)]
    labels = [LABELS[rng.randrange(5)] for _ in range(n_rows)]
    # Duplicate a few rows to force exact distance ties.
    for _ in range(n_rows // 10):
        rows.append(list(rng.choice(rows)))
        labels.append(LABELS[rng.randrange(5)])
    queries = [[rng.randint(0, 2**20) for _ in range(FEATURE_COUNT)]
               for _ in range(n_queries)]
    return rows, labels, queries


def test_distance_identity_and_345():
    a = vec([0] * 54).values
    assert euclidean_distance(a, a) == 0.0
    b = vec([3, 4]).values
    assert euclidean_distance(a, b) == 5.0


def test_distance_matches_simple_summation():
    rng = random.Random(0)
    for _ in range(20):
        a = [rng.uniform(-1e6, 1e6) for _ in range(54)]
        b = [rng.uniform(-1e6, 1e6) for _ in range(54)]
        expected = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
        assert euclidean_distance(a, b) == pytest.approx(expected, rel=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        euclidean_distance([1, 2, 3], [1, 2])


def test_build_index_basics():
    index = build_index([vec([1], "x"), vec([2], "y"), vec([3], "x")])
    assert index.size == 3
    assert index.class_set == ("x", "y")  # first-seen order
    assert index.scaling == "none"


def test_build_index_rejects_empty_and_unlabeled():
    with pytest.raises(EmptyTable):
        build_index([])
    with pytest.raises(UnlabeledRow):
        build_index([vec([1], "x"), vec([2], None)])


def test_minmax_scaling_midpoint_and_constant_column():
    rows = [vec([2, 7], "a"), vec([10, 7], "b"), vec([6, 7], "a")]
    index = build_index(rows, scaling="minmax")
    # column 0: min 2, max 10 -> values 0, 1, 0.5; column 1 constant -> 0
    assert index.matrix[:, 0].tolist() == [0.0, 1.0, 0.5]
    assert index.matrix[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert np.all(index.matrix >= 0) and np.all(index.matrix <= 1)


def test_scaled_query_uses_training_ranges_only():
    rows = [vec([0], "low"), vec([10], "high")]
    index = build_index(rows, scaling="minmax")
    # A query far outside the training range still maps with train min/range.
    prediction = classify(index, vec([100]).values, KnnConfig(k=1))
    assert prediction.label == "high"


def test_self_match_at_k1():
    rows = [vec([i * 10], LABELS[i % 5], sample_id=str(i)) for i in range(8)]
    index = build_index(rows)
    for row in rows:
        assert classify(index, row, KnnConfig(k=1)).label == row.label


def test_majority_vote():
    rows = [vec([0], "A"), vec([1], "A"), vec([2], "B"), vec([50], "B"),
            vec([60], "B")]
    index = build_index(rows)
    assert classify(index, vec([0]).values, KnnConfig(k=3)).label == "A"


def test_distance_tie_resolves_to_lowest_row_index():
    rows = [vec([5], "first"), vec([5], "second")]
    index = build_index(rows)
    prediction = classify(index, vec([5]).values, KnnConfig(k=1))
    assert prediction.label == "first"
    assert prediction.neighbors[0].row == 0


def test_vote_tie_resolves_to_class_of_nearest():
    # k=4 with 2 votes each; "near" owns the single closest neighbor.
    rows = [vec([0], "near"), vec([3], "far"), vec([4], "far"), vec([5], "near")]
    index = build_index(rows)
    prediction = classify(index, vec([0]).values, KnnConfig(k=4))
    assert prediction.label == "near"


def test_neighbor_list_sorted_ascending():
    rows = [vec([9], "a"), vec([1], "b"), vec([5], "c")]
    index = build_index(rows)
    prediction = classify(index, vec([0]).values, KnnConfig(k=3))
    distances = [n.distance for n in prediction.neighbors]
    assert distances == sorted(distances)
    assert [n.label for n in prediction.neighbors] == ["b", "c", "a"]


def test_k_too_large():
    index = build_index([vec([1], "x")])
    with pytest.raises(KTooLarge):
        classify(index, vec([1]).values, KnnConfig(k=2))


def test_query_dimension_mismatch():
    index = build_index([vec([1], "x")])
    with pytest.raises(DimensionMismatch):
        classify(index, [1.0, 2.0], KnnConfig(k=1))


def test_oracle_equivalence_randomized():
    rng = random.Random(2024)
    for _ in range(10):
        rows, labels, queries = random_instance(rng, rng.randint(20, 120), 15)
        index = build_index([
            vec(row, label) for row, label in zip(rows, labels)])
        for k in (1, 3, 5):
            for query in queries:
                expected = knn_predict(rows, labels, query, k)
                got = classify(index, vec(query).values, KnnConfig(k=k)).label
                assert got == expected


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_memorization_property(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 40)
    seen = set()
    rows = []
    for i in range(n):
        while True:
            values = tuple(rng.randint(0, 1000) for _ in range(4))
            if values not in seen:
                seen.add(values)
                break
        rows.append(vec(values, LABELS[i % 5]))
    index = build_index(rows)
    for row in rows:
        assert classify(index, row, KnnConfig(k=1)).label == row.label


def test_permutation_invariance_with_distinct_distances():
    rng = random.Random(77)
    rows, labels, queries = random_instance(rng, 30, 10)
    rows, labels = rows[:30], labels[:30]  # drop forced duplicates

    index_a = build_index([vec(r, l) for r, l in zip(rows, labels)])
    order = list(range(30))
    rng.shuffle(order)
    index_b = build_index([vec(rows[i], labels[i]) for i in order])

    for query in queries:
        d = sorted(euclidean_distance(vec(r).values, vec(query).values)
                   for r in rows)
        if any(abs(x - y) < 1e-9 for x, y in zip(d, d[1:])):
            continue  # only claimed for all-distinct distances
        a = classify(index_a, vec(query).values, KnnConfig(k=3)).label
        b = classify(index_b, vec(query).values, KnnConfig(k=3)).label
        assert a == b


def test_sweep_on_training_set_is_perfect_at_k1():
    rows = [vec([i * 7], LABELS[i % 5], sample_id=str(i)) for i in range(10)]
    index = build_index(rows)
    results = sweep_k(index, rows, [1])
    assert results == [(1, 1.0)]


def test_sweep_shape_and_errors():
    rows = [vec([i], "a" if i < 3 else "b") for i in range(6)]
    index = build_index(rows)
    results = sweep_k(index, rows, [1, 3, 5])
    assert [k for k, _ in results] == [1, 3, 5]
    with pytest.raises(KTooLarge):
        sweep_k(index, rows, [7])
    with pytest.raises(EmptyTable):
        sweep_k(index, [], [1])
    with pytest.raises(ValueError):
        sweep_k(index, rows, [])


def test_persistence_round_trip_bit_exact(tmp_path):
    rng = random.Random(8)
    rows, labels, _ = random_instance(rng, 40, 0)
    index = build_index([vec(r, l) for r, l in zip(rows, labels)],
                        scaling="minmax")
    path = tmp_path / "index.npz"
    save_index(path, index)
    loaded = load_index(path)

    assert loaded.matrix.dtype == index.matrix.dtype
    assert np.array_equal(loaded.matrix.view(np.uint64),
                          index.matrix.view(np.uint64))  # bitwise
    assert loaded.labels == index.labels
    assert loaded.class_set == index.class_set
    assert loaded.scaling == "minmax"
    assert np.array_equal(loaded.scale_min, index.scale_min)
    assert np.array_equal(loaded.scale_range, index.scale_range)

    query = vec([rng.randint(0, 2**20) for _ in range(54)]).values
    assert (classify(loaded, query, KnnConfig(k=3)).label
            == classify(index, query, KnnConfig(k=3)).label)


def test_persistence_rejects_foreign_schema(tmp_path):
    path = tmp_path / "bad.npz"
    np.savez(path, schemaVersion=np.array(99), featureNames=np.array(["x"]),
             matrix=np.zeros((1, 54)), labels=np.array(["a"]),
             classSet=np.array(["a"]), scaling=np.array("none"))
    with pytest.raises(SchemaMismatch):
        load_index(path)
