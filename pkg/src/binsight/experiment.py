"""End-to-end experiment execution: split, extract, index, classify, report.

The k-NN arm runs entirely in-process. The deep-learning arm is a
separate trainer fed through files: this module materializes its inputs
(class-foldered PNG trees plus the plan JSON) and ingests the metrics
JSON it produces, validating the shared schema so both arms can be
reported side by side.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus.ingest import SampleRecord
from .corpus.plans import ExperimentPlan, write_plan
from .errors import EmptyTable
from .evaluation import (
    MetricsReport,
    build_report,
    confusion_matrix,
    from_document,
    render_report,
)
from .imaging import convert_file, write_image_manifest
from .knn import KnnConfig, build_index, classify, save_index, sweep_k
from .pe.batch import (
    extract_many,
    write_feature_table,
    write_skip_manifest,
)
from .pe.features import FeatureVector


def _extract_records(plan: ExperimentPlan, records: list[SampleRecord],
                     workers: int = 1
                     ) -> tuple[list[FeatureVector], list[tuple[str, str]]]:
    jobs = [(rec.source_path, plan.class_of(rec)) for rec in records]
    return extract_many(jobs, workers=workers)


def run_knn_plan(plan: ExperimentPlan, out_dir: str | Path,
                 k: int = 1, scaling: str = "none",
                 sweep_values: list[int] | None = None,
                 workers: int = 1,
                 config: dict | None = None
                 ) -> tuple[MetricsReport, dict[str, Path]]:
    """Run one k-NN experiment, leaving all artifacts under out_dir."""
    plan.verify()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    plan_path = out_dir / "plan.json"
    write_plan(plan_path, plan)
    artifacts["plan"] = plan_path

    train_vecs, train_skips = _extract_records(plan, plan.train, workers)
    test_vecs, test_skips = _extract_records(plan, plan.test, workers)
    if not train_vecs:
        raise EmptyTable("no training sample could be feature-extracted")
    if not test_vecs:
        raise EmptyTable("no test sample could be feature-extracted")

    train_path = out_dir / "train_features.csv"
    test_path = out_dir / "test_features.csv"
    write_feature_table(train_path, train_vecs)
    write_feature_table(test_path, test_vecs)
    artifacts["trainFeatures"] = train_path
    artifacts["testFeatures"] = test_path

    skips_path = out_dir / "extract_skips.csv"
    write_skip_manifest(skips_path, train_skips + test_skips)
    artifacts["extractSkips"] = skips_path

    index = build_index(train_vecs, scaling=scaling)
    index_path = out_dir / "index.npz"
    save_index(index_path, index)
    artifacts["index"] = index_path

    knn_config = KnnConfig(k=k)
    actual = [vec.label for vec in test_vecs]
    predicted = [classify(index, vec, knn_config).label for vec in test_vecs]
    cm = confusion_matrix(actual, predicted, plan.class_list)

    sweep = None
    if sweep_values:
        sweep = sweep_k(index, test_vecs, sweep_values)

    report = build_report(
        plan.experiment_id, "knn", plan.classification, cm,
        k=k, scaling=scaling, split=plan.split_params,
        zero_day=plan.zero_day, config=config, sweep=sweep)
    artifacts.update(render_report(report, out_dir))
    return report, artifacts


def materialize_dl_inputs(plan: ExperimentPlan, out_dir: str | Path,
                          width: int = 256) -> dict[str, Path]:
    """Write the image trees and plan file a deep-learning trainer consumes.

    Layout: <out_dir>/images/{train,test}/<class>/<sampleId>.png, with a
    conversion manifest per side and the plan JSON at the top.
    """
    plan.verify()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    plan_path = out_dir / "plan.json"
    write_plan(plan_path, plan)
    artifacts["plan"] = plan_path

    for side, records in (("train", plan.train), ("test", plan.test)):
        records_out = []
        for rec in records:
            target = (out_dir / "images" / side / plan.class_of(rec)
                      / f"{rec.sample_id}.png")
            records_out.append(convert_file(rec.source_path, target, width))
        manifest_path = out_dir / f"images_{side}_manifest.csv"
        write_image_manifest(manifest_path, records_out)
        artifacts[f"{side}Images"] = out_dir / "images" / side
        artifacts[f"{side}ImageManifest"] = manifest_path
    return artifacts


def load_dl_metrics(path: str | Path) -> MetricsReport:
    """Read and schema-validate a metrics JSON produced by the DL arm."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return from_document(doc)


def ingest_dl_metrics(path: str | Path, out_dir: str | Path,
                      basename: str = "dl_metrics") -> tuple[MetricsReport, dict[str, Path]]:
    """Validate an external DL metrics file and re-render it into a run dir."""
    report = load_dl_metrics(path)
    artifacts = render_report(report, out_dir, basename=basename)
    return report, artifacts
