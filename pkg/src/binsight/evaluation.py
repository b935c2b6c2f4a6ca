"""Accuracy, confusion matrices, and the shared metrics report format.

Confusion matrices are oriented rows = actual, columns = predicted, and
every rendered artifact states that orientation. The JSON metrics
document has a fixed, versioned field set — the deep-learning arm emits
the same document, so anything that reads one can read both. Rendering
is deterministic: the same report always produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import LengthMismatch, SchemaMismatch, UnknownLabel

METRICS_SCHEMA_VERSION = 1

#: Exact top-level key set of the metrics JSON document (order fixed).
METRICS_FIELDS: tuple[str, ...] = (
    "schemaVersion",
    "experimentId",
    "technique",
    "classification",
    "classList",
    "accuracy",
    "perClassRecall",
    "falsePositiveRate",
    "falseNegativeRate",
    "k",
    "scaling",
    "split",
    "zeroDay",
    "confusionMatrix",
    "config",
)


@dataclass(frozen=True)
class ConfusionMatrix:
    class_list: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]  # rows = actual, columns = predicted

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def accuracy(self) -> float:
        total = self.total
        if total == 0:
            return 0.0
        return sum(self.counts[i][i] for i in range(len(self.class_list))) / total

    def per_class_recall(self) -> dict[str, float]:
        out = {}
        for i, cls in enumerate(self.class_list):
            row_sum = sum(self.counts[i])
            out[cls] = self.counts[i][i] / row_sum if row_sum else 0.0
        return out


def confusion_matrix(actual: list[str], predicted: list[str],
                     class_list: list[str] | tuple[str, ...]) -> ConfusionMatrix:
    if len(actual) != len(predicted):
        raise LengthMismatch(
            f"{len(actual)} actual labels vs {len(predicted)} predictions")
    if not actual:
        raise LengthMismatch("cannot build a confusion matrix from zero samples")
    index = {cls: i for i, cls in enumerate(class_list)}
    counts = [[0] * len(class_list) for _ in class_list]
    for a, p in zip(actual, predicted):
        if a not in index:
            raise UnknownLabel(f"actual label {a!r} not in class list")
        if p not in index:
            raise UnknownLabel(f"predicted label {p!r} not in class list")
        counts[index[a]][index[p]] += 1
    return ConfusionMatrix(
        class_list=tuple(class_list),
        counts=tuple(tuple(row) for row in counts))


def binary_rates(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """(accuracy, FPR, FNR) for a 2x2 matrix with class order (benign, malware).

    FPR counts benign misread as malware; FNR counts malware missed as
    benign. A class with zero actual samples yields rate 0.
    """
    if len(cm.class_list) != 2:
        raise LengthMismatch(
            f"binary rates need a 2x2 matrix, got {len(cm.class_list)} classes")
    benign_row, malware_row = cm.counts
    fpr = benign_row[1] / sum(benign_row) if sum(benign_row) else 0.0
    fnr = malware_row[0] / sum(malware_row) if sum(malware_row) else 0.0
    return cm.accuracy(), fpr, fnr


@dataclass
class MetricsReport:
    experiment_id: int
    technique: str            # "knn" or "dl"
    classification: str       # "binary" or "multiclass"
    confusion: ConfusionMatrix
    accuracy: float
    per_class_recall: dict[str, float]
    false_positive_rate: float | None = None
    false_negative_rate: float | None = None
    k: int | None = None
    scaling: str | None = None
    split: dict | None = None     # e.g. trainFraction / seed / threshold
    zero_day: bool = False
    config: dict | None = None    # fully resolved run configuration
    sweep: list[tuple[int, float]] = field(default_factory=list)


def build_report(experiment_id: int, technique: str, classification: str,
                 cm: ConfusionMatrix, *, k: int | None = None,
                 scaling: str | None = None, split: dict | None = None,
                 zero_day: bool = False, config: dict | None = None,
                 sweep: list[tuple[int, float]] | None = None) -> MetricsReport:
    """Derive all rate fields from the confusion matrix."""
    fpr = fnr = None
    if classification == "binary":
        _, fpr, fnr = binary_rates(cm)
    return MetricsReport(
        experiment_id=experiment_id, technique=technique,
        classification=classification, confusion=cm,
        accuracy=cm.accuracy(), per_class_recall=cm.per_class_recall(),
        false_positive_rate=fpr, false_negative_rate=fnr,
        k=k, scaling=scaling, split=split, zero_day=zero_day,
        config=config, sweep=list(sweep or []))


def to_document(report: MetricsReport) -> dict:
    """The canonical JSON-ready form (fixed key order, full precision)."""
    return {
        "schemaVersion": METRICS_SCHEMA_VERSION,
        "experimentId": report.experiment_id,
        "technique": report.technique,
        "classification": report.classification,
        "classList": list(report.confusion.class_list),
        "accuracy": report.accuracy,
        "perClassRecall": {cls: report.per_class_recall[cls]
                           for cls in report.confusion.class_list},
        "falsePositiveRate": report.false_positive_rate,
        "falseNegativeRate": report.false_negative_rate,
        "k": report.k,
        "scaling": report.scaling,
        "split": report.split,
        "zeroDay": report.zero_day,
        "confusionMatrix": {
            "rows": "actual",
            "columns": "predicted",
            "classList": list(report.confusion.class_list),
            "counts": [list(row) for row in report.confusion.counts],
        },
        "config": report.config,
    }


def from_document(doc: dict) -> MetricsReport:
    """Inverse of to_document (lossless for all report fields but sweep)."""
    validate_document(doc)
    cm = ConfusionMatrix(
        class_list=tuple(doc["confusionMatrix"]["classList"]),
        counts=tuple(tuple(int(c) for c in row)
                     for row in doc["confusionMatrix"]["counts"]))
    return MetricsReport(
        experiment_id=doc["experimentId"],
        technique=doc["technique"],
        classification=doc["classification"],
        confusion=cm,
        accuracy=float(doc["accuracy"]),
        per_class_recall={k: float(v) for k, v in doc["perClassRecall"].items()},
        false_positive_rate=doc["falsePositiveRate"],
        false_negative_rate=doc["falseNegativeRate"],
        k=doc["k"],
        scaling=doc["scaling"],
        split=doc["split"],
        zero_day=bool(doc["zeroDay"]),
        config=doc["config"])


def validate_document(doc: dict) -> None:
    """Enforce the exact metrics field set; raises SchemaMismatch."""
    if not isinstance(doc, dict):
        raise SchemaMismatch("metrics document must be a JSON object")
    keys = tuple(doc.keys())
    missing = [k for k in METRICS_FIELDS if k not in doc]
    extra = [k for k in keys if k not in METRICS_FIELDS]
    if missing or extra:
        raise SchemaMismatch(
            f"metrics field set mismatch: missing={missing} extra={extra}")
    if doc["schemaVersion"] != METRICS_SCHEMA_VERSION:
        raise SchemaMismatch(
            f"metrics schema version {doc['schemaVersion']!r} unsupported")
    cm = doc["confusionMatrix"]
    expected_cm_keys = {"rows", "columns", "classList", "counts"}
    if not isinstance(cm, dict) or set(cm.keys()) != expected_cm_keys:
        raise SchemaMismatch("confusionMatrix block malformed")
    n = len(cm["classList"])
    if len(cm["counts"]) != n or any(len(row) != n for row in cm["counts"]):
        raise SchemaMismatch("confusion counts are not square over classList")


def render_text(report: MetricsReport) -> str:
    """Human-readable summary with a fixed layout (accuracy to 2 decimals)."""
    lines = [
        f"Experiment {report.experiment_id} "
        f"({report.technique}, {report.classification})",
        f"Accuracy: {report.accuracy * 100:.2f}%",
    ]
    if report.false_positive_rate is not None:
        lines.append(f"False positive rate: {report.false_positive_rate * 100:.2f}%")
        lines.append(f"False negative rate: {report.false_negative_rate * 100:.2f}%")
    if report.k is not None:
        lines.append(f"k: {report.k}")
    if report.scaling is not None:
        lines.append(f"Scaling: {report.scaling}")
    if report.zero_day:
        lines.append("Zero-day protocol: held-out families, disjointness verified")
    if report.split:
        parts = ", ".join(f"{key}={report.split[key]}" for key in sorted(report.split))
        lines.append(f"Split: {parts}")
    lines.append("")
    lines.append("Confusion matrix (rows = actual, columns = predicted):")

    width = max(7, max(len(c) for c in report.confusion.class_list) + 1)
    header = " " * width + "".join(f"{c:>{width}}" for c in report.confusion.class_list)
    lines.append(header)
    for cls, row in zip(report.confusion.class_list, report.confusion.counts):
        lines.append(f"{cls:>{width}}" + "".join(f"{n:>{width}}" for n in row))
    lines.append("")
    return "\n".join(lines)


def render_report(report: MetricsReport, out_dir: str | Path,
                  basename: str = "metrics") -> dict[str, Path]:
    """Write metrics JSON + confusion text (+ k-sweep CSV when present)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    json_path = out_dir / f"{basename}.json"
    json_path.write_text(
        json.dumps(to_document(report), indent=2) + "\n", encoding="utf-8")
    written["metrics"] = json_path

    text_path = out_dir / f"{basename}.txt"
    text_path.write_text(render_text(report), encoding="utf-8")
    written["confusion"] = text_path

    if report.sweep:
        sweep_path = out_dir / f"{basename}_ksweep.csv"
        with open(sweep_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "accuracy"])
            for k, acc in report.sweep:
                writer.writerow([k, repr(acc)])
        written["ksweep"] = sweep_path
    return written
