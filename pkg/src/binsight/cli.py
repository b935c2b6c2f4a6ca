"""Command-line front end.

Subcommands wire the pipeline stages together: feature extraction,
image conversion, index building, classification, k sweeps, full
experiments, and synthetic corpus generation. Scalar settings resolve
with precedence: command-line flag, then JSON config file, then built-in
default (width 256, k 1, scaling none, train fraction 0.8, size
threshold 100).

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant
violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .corpus.ingest import ROLE_BENIGN, ROLE_MALWARE, ingest
from .corpus.plans import TECHNIQUE_KNN, make_plan
from .corpus.synth import SynthSpec, spec_from_json, synth_corpus
from .errors import BinsightError, InvariantViolation
from .experiment import ingest_dl_metrics, materialize_dl_inputs, run_knn_plan
from .imaging import DEFAULT_MAX_BYTES, convert_directory, write_image_manifest
from .knn import KnnConfig, build_index, classify, load_index, save_index, sweep_k
from .pe.batch import (
    extract_directory,
    read_feature_table,
    write_feature_table,
    write_skip_manifest,
)

DEFAULTS = {
    "width": 256,
    "k": 1,
    "scaling": "none",
    "trainFraction": 0.8,
    "threshold": 100,
    "seed": 0,
    "workers": 1,
}

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3


@dataclass
class RunConfig:
    """Fully resolved scalar settings for one command invocation."""

    command: str
    width: int
    k: int
    scaling: str
    train_fraction: float
    seed: int
    threshold: int
    workers: int
    experiment_id: int | None = None

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "width": self.width,
            "k": self.k,
            "scaling": self.scaling,
            "trainFraction": self.train_fraction,
            "seed": self.seed,
            "threshold": self.threshold,
            "workers": self.workers,
            "experimentId": self.experiment_id,
        }


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; this maps them to exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="binsight", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", metavar="FILE",
                        help="JSON file supplying defaults for scalar flags")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="batch-extract PE features to CSV")
    p.add_argument("--in", dest="input", required=True, metavar="DIR")
    p.add_argument("--out", dest="output", required=True, metavar="CSV")
    p.add_argument("--skips", metavar="CSV",
                   help="skip manifest path (default: <out>.skips.csv)")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("bin2img", help="convert binaries to grayscale PNGs")
    p.add_argument("--in", dest="input", required=True, metavar="DIR")
    p.add_argument("--out", dest="output", required=True, metavar="DIR")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--max-bytes", type=int, default=DEFAULT_MAX_BYTES)

    p = sub.add_parser("index", help="build a k-NN index from a feature table")
    p.add_argument("--features", required=True, metavar="CSV")
    p.add_argument("--out", dest="output", required=True, metavar="NPZ")
    p.add_argument("--scaling", choices=["none", "minmax"], default=None)

    p = sub.add_parser("classify", help="classify feature rows against an index")
    p.add_argument("--index", required=True, metavar="NPZ")
    p.add_argument("--features", required=True, metavar="CSV")
    p.add_argument("--out", dest="output", required=True, metavar="CSV")
    p.add_argument("--k", type=int, default=None)

    p = sub.add_parser("sweep-k", help="accuracy for several k values")
    p.add_argument("--index", required=True, metavar="NPZ")
    p.add_argument("--features", required=True, metavar="CSV")
    p.add_argument("--out", dest="output", required=True, metavar="CSV")
    p.add_argument("--k-values", default="1,2,3,4,5,6,7,8,9",
                   help="comma-separated list (default 1..9)")

    p = sub.add_parser("experiment", help="run one of the eight stock experiments")
    p.add_argument("--id", type=int, required=True, choices=range(1, 9),
                   metavar="1..8")
    p.add_argument("--malware", required=True, metavar="DIR")
    p.add_argument("--benign", required=True, metavar="DIR")
    p.add_argument("--benign-alt", metavar="DIR",
                   help="test-side benign tree (zero-day plans)")
    p.add_argument("--out", dest="output", required=True, metavar="RUNDIR")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--scaling", choices=["none", "minmax"], default=None)
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threshold", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--sweep", action="store_true",
                   help="also sweep k over 1..9 and write the CSV")
    p.add_argument("--dl-metrics", metavar="JSON",
                   help="metrics file from the deep-learning arm to validate "
                        "and report side by side")

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--out", dest="output", required=True, metavar="DIR")
    p.add_argument("--spec", metavar="JSON", help="synth settings as JSON")
    p.add_argument("--families", type=int, default=4)
    p.add_argument("--samples", type=int, default=120)
    p.add_argument("--base-length", type=int, default=16384)
    p.add_argument("--signature-length", type=int, default=2048)
    p.add_argument("--noise-rate", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--prefix", default="fam")
    p.add_argument("--role", choices=[ROLE_MALWARE, ROLE_BENIGN],
                   default=ROLE_MALWARE)
    p.add_argument("--code-base", type=int, default=0)
    return parser


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    return doc


def _resolve(args: argparse.Namespace, file_config: dict) -> RunConfig:
    def pick(flag_name: str, key: str):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return flag
        if key in file_config:
            return file_config[key]
        return DEFAULTS[key]

    return RunConfig(
        command=args.command,
        width=int(pick("width", "width")),
        k=int(pick("k", "k")),
        scaling=str(pick("scaling", "scaling")),
        train_fraction=float(pick("train_fraction", "trainFraction")),
        seed=int(pick("seed", "seed")),
        threshold=int(pick("threshold", "threshold")),
        workers=int(pick("workers", "workers")),
        experiment_id=getattr(args, "id", None),
    )


def _cmd_extract(args, config: RunConfig) -> int:
    vectors, skips = extract_directory(args.input, workers=config.workers)
    write_feature_table(args.output, vectors)
    skips_path = args.skips or f"{args.output}.skips.csv"
    write_skip_manifest(skips_path, skips)
    print(f"extracted {len(vectors)} samples, skipped {len(skips)}")
    if not vectors:
        print("error: no sample could be extracted", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _cmd_bin2img(args, config: RunConfig) -> int:
    out_dir = Path(args.output)
    records, skips = convert_directory(args.input, out_dir / "images",
                                       width=config.width,
                                       max_bytes=args.max_bytes)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_image_manifest(out_dir / "manifest.csv", records)
    write_skip_manifest(out_dir / "skips.csv", skips)
    print(f"converted {len(records)} files, skipped {len(skips)}")
    if not records:
        print("error: no file could be converted", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _cmd_index(args, config: RunConfig) -> int:
    vectors = read_feature_table(args.features)
    index = build_index(vectors, scaling=config.scaling)
    save_index(args.output, index)
    print(f"indexed {index.size} rows over {len(index.class_set)} classes "
          f"(scaling={index.scaling})")
    return EXIT_OK


def _cmd_classify(args, config: RunConfig) -> int:
    index = load_index(args.index)
    vectors = read_feature_table(args.features)
    knn_config = KnnConfig(k=config.k)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sampleId", "predicted", "actual"])
        hits = labeled = 0
        for vec in vectors:
            prediction = classify(index, vec, knn_config)
            writer.writerow([vec.sample_id, prediction.label, vec.label or ""])
            if vec.label:
                labeled += 1
                hits += prediction.label == vec.label
    if labeled:
        print(f"classified {len(vectors)} rows; "
              f"accuracy on {labeled} labeled rows: {hits / labeled * 100:.2f}%")
    else:
        print(f"classified {len(vectors)} rows")
    return EXIT_OK


def _cmd_sweep_k(args, config: RunConfig) -> int:
    index = load_index(args.index)
    vectors = read_feature_table(args.features)
    k_values = [int(v) for v in args.k_values.split(",") if v.strip()]
    results = sweep_k(index, vectors, k_values)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "accuracy"])
        for k, acc in results:
            writer.writerow([k, repr(acc)])
    best_k, best_acc = max(results, key=lambda pair: (pair[1], -pair[0]))
    print(f"best k={best_k} at accuracy {best_acc * 100:.2f}%")
    return EXIT_OK


def _cmd_experiment(args, config: RunConfig) -> int:
    malware = ingest(args.malware, role=ROLE_MALWARE)
    benign = ingest(args.benign, role=ROLE_BENIGN)
    benign_alt = None
    if args.benign_alt:
        benign_alt = ingest(args.benign_alt, role=ROLE_BENIGN)

    plan = make_plan(args.id, malware=malware, benign=benign,
                     benign_alt=benign_alt,
                     train_fraction=config.train_fraction,
                     seed=config.seed, threshold=config.threshold)

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = config.as_dict()
    artifacts: dict[str, Path] = {}

    if plan.technique == TECHNIQUE_KNN:
        sweep_values = list(range(1, 10)) if args.sweep else None
        report, artifacts = run_knn_plan(
            plan, out_dir, k=config.k, scaling=config.scaling,
            sweep_values=sweep_values, workers=config.workers,
            config=resolved)
        print(f"experiment {plan.experiment_id} (knn, {plan.classification}): "
              f"accuracy {report.accuracy * 100:.2f}%")
        if report.false_positive_rate is not None:
            print(f"  FPR {report.false_positive_rate * 100:.2f}%  "
                  f"FNR {report.false_negative_rate * 100:.2f}%")
    else:
        artifacts = materialize_dl_inputs(plan, out_dir, width=config.width)
        print(f"experiment {plan.experiment_id} (dl, {plan.classification}): "
              f"materialized {len(plan.train)} train / {len(plan.test)} test images")

    if args.dl_metrics:
        dl_report, dl_artifacts = ingest_dl_metrics(args.dl_metrics, out_dir)
        artifacts.update(dl_artifacts)
        print(f"  dl metrics ingested: accuracy {dl_report.accuracy * 100:.2f}%")

    manifest = {
        "command": "experiment",
        "config": resolved,
        "planWarnings": plan.warnings,
        "artifacts": {name: str(Path(path).relative_to(out_dir))
                      for name, path in sorted(artifacts.items())},
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_synth(args, config: RunConfig) -> int:
    if args.spec:
        spec = spec_from_json(args.spec)
    else:
        spec = SynthSpec(
            family_count=args.families,
            samples_per_family=args.samples,
            base_length=args.base_length,
            signature_length=args.signature_length,
            noise_rate=args.noise_rate,
            seed=config.seed if args.seed is None else args.seed,
            family_prefix=args.prefix,
            role=args.role,
            family_code_base=args.code_base,
        )
    corpus = synth_corpus(spec, args.output)
    print(f"wrote {len(corpus)} samples across "
          f"{len(corpus.family_counts)} families under {args.output}")
    return EXIT_OK


_COMMANDS = {
    "extract": _cmd_extract,
    "bin2img": _cmd_bin2img,
    "index": _cmd_index,
    "classify": _cmd_classify,
    "sweep-k": _cmd_sweep_k,
    "experiment": _cmd_experiment,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        file_config = _load_config_file(args.config)
        config = _resolve(args, file_config)
        return _COMMANDS[args.command](args, config)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except BinsightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
