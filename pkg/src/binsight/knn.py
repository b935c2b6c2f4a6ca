"""Exact brute-force k-nearest-neighbor classification.

The index is just the training matrix (N x 54 float64) plus labels; all
work happens at query time via an exhaustive Euclidean scan. Tie rules
are fixed and deterministic: equal distances resolve to the lowest
training-row index, and vote ties resolve to whichever tied class owns
the earliest-ranked neighbor. Optional min-max scaling maps training
columns into [0, 1]; the stored ranges come from the training data only
and are re-applied to every query.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTable,
    KTooLarge,
    SchemaMismatch,
    UnlabeledRow,
)
from .pe.features import FEATURE_COUNT, FEATURE_NAMES, FeatureVector

INDEX_SCHEMA_VERSION = 1

SCALING_NONE = "none"
SCALING_MINMAX = "minmax"


@dataclass(frozen=True)
class KnnConfig:
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Neighbor:
    row: int
    label: str
    distance: float


@dataclass(frozen=True)
class Prediction:
    label: str
    neighbors: tuple[Neighbor, ...]


@dataclass
class KnnIndex:
    matrix: np.ndarray  # (N, 54) float64; scaled if scaling != none
    labels: tuple[str, ...]
    class_set: tuple[str, ...]  # distinct labels in first-seen order
    scaling: str = SCALING_NONE
    scale_min: np.ndarray | None = None    # per-feature training minimum
    scale_range: np.ndarray | None = None  # per-feature training max - min
    schema_version: int = INDEX_SCHEMA_VERSION

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _as_vector(query: Sequence[float] | FeatureVector) -> np.ndarray:
    values = query.values if isinstance(query, FeatureVector) else query
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (FEATURE_COUNT,):
        raise DimensionMismatch(
            f"query has shape {arr.shape}, expected ({FEATURE_COUNT},)")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch("query contains non-finite values")
    return arr


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"shape {va.shape} vs {vb.shape}")
    return float(np.sqrt(np.sum((va - vb) ** 2)))


def build_index(vectors: list[FeatureVector],
                scaling: str = SCALING_NONE) -> KnnIndex:
    """Materialize labeled feature vectors into a queryable index."""
    if not vectors:
        raise EmptyTable("cannot build an index from zero rows")
    if scaling not in (SCALING_NONE, SCALING_MINMAX):
        raise ValueError(f"unknown scaling mode {scaling!r}")

    labels = []
    for vec in vectors:
        if not vec.label:
            raise UnlabeledRow(
                f"row for {vec.sample_id or vec.source_path or '<unknown>'} has no label")
        labels.append(vec.label)

    matrix = np.array([vec.values for vec in vectors], dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise SchemaMismatch("feature matrix contains non-finite values")

    scale_min = scale_range = None
    if scaling == SCALING_MINMAX:
        scale_min = matrix.min(axis=0)
        scale_range = matrix.max(axis=0) - scale_min
        matrix = _apply_scaling(matrix, scale_min, scale_range)

    class_set = tuple(dict.fromkeys(labels))
    return KnnIndex(matrix=matrix, labels=tuple(labels), class_set=class_set,
                    scaling=scaling, scale_min=scale_min,
                    scale_range=scale_range)


def _apply_scaling(values: np.ndarray, scale_min: np.ndarray,
                   scale_range: np.ndarray) -> np.ndarray:
    # Constant training columns (range 0) map to 0 for every input.
    out = np.zeros_like(values, dtype=np.float64)
    nonzero = scale_range != 0
    out[..., nonzero] = (values[..., nonzero] - scale_min[nonzero]) / scale_range[nonzero]
    return out


def classify(index: KnnIndex, query: Sequence[float] | FeatureVector,
             config: KnnConfig = KnnConfig()) -> Prediction:
    """Majority vote over the k nearest training rows."""
    if config.k > index.size:
        raise KTooLarge(f"k={config.k} exceeds index size {index.size}")
    q = _as_vector(query)
    if index.scaling == SCALING_MINMAX:
        q = _apply_scaling(q, index.scale_min, index.scale_range)

    distances = np.sqrt(np.sum((index.matrix - q) ** 2, axis=1))
    order = np.argsort(distances, kind="stable")[:config.k]
    neighbors = tuple(
        Neighbor(row=int(i), label=index.labels[i], distance=float(distances[i]))
        for i in order)

    votes: dict[str, int] = {}
    for n in neighbors:
        votes[n.label] = votes.get(n.label, 0) + 1
    top = max(votes.values())
    tied = {label for label, count in votes.items() if count == top}
    # Neighbors are distance-sorted, so the first tied label seen is the
    # tied class holding the nearest neighbor.
    winner = next(n.label for n in neighbors if n.label in tied)
    return Prediction(label=winner, neighbors=neighbors)


def sweep_k(index: KnnIndex, validation: list[FeatureVector],
            k_values: Sequence[int]) -> list[tuple[int, float]]:
    """Accuracy of the index on labeled validation rows for each k."""
    if not k_values:
        raise ValueError("k_values must be non-empty")
    if not validation:
        raise EmptyTable("validation set is empty")
    if max(k_values) > index.size:
        raise KTooLarge(
            f"max k {max(k_values)} exceeds index size {index.size}")
    for vec in validation:
        if not vec.label:
            raise UnlabeledRow("validation rows must be labeled")

    results = []
    for k in k_values:
        config = KnnConfig(k=k)
        hits = sum(
            1 for vec in validation
            if classify(index, vec, config).label == vec.label)
        results.append((k, hits / len(validation)))
    return results


def save_index(path: str | Path, index: KnnIndex) -> None:
    """Persist to an npz container that round-trips bit-exactly."""
    payload = {
        "schemaVersion": np.array(index.schema_version, dtype=np.int64),
        "featureNames": np.array(FEATURE_NAMES),
        "matrix": index.matrix,
        "labels": np.array(index.labels),
        "classSet": np.array(index.class_set),
        "scaling": np.array(index.scaling),
    }
    if index.scale_min is not None:
        payload["scaleMin"] = index.scale_min
        payload["scaleRange"] = index.scale_range
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_index(path: str | Path) -> KnnIndex:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["schemaVersion"])
        if version != INDEX_SCHEMA_VERSION:
            raise SchemaMismatch(f"index schema version {version} unsupported")
        names = tuple(str(n) for n in data["featureNames"])
        if names != FEATURE_NAMES:
            raise SchemaMismatch(f"{path}: index feature schema differs")
        scaling = str(data["scaling"])
        scale_min = data["scaleMin"] if "scaleMin" in data else None
        scale_range = data["scaleRange"] if "scaleRange" in data else None
        return KnnIndex(
            matrix=data["matrix"],
            labels=tuple(str(x) for x in data["labels"]),
            class_set=tuple(str(x) for x in data["classSet"]),
            scaling=scaling,
            scale_min=scale_min,
            scale_range=scale_range,
            schema_version=version,
        )
