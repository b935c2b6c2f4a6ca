/** The shared metrics report document.
 *
 * Both classification arms emit this exact field set, in this order,
 * so any consumer can read either. validateMetricsDoc enforces the set
 * strictly: a missing or extra top-level key is fatal.
 */

import { SchemaMismatch } from './errors.js';

export const METRICS_SCHEMA_VERSION = 1;

export const METRICS_FIELDS = [
  'schemaVersion',
  'experimentId',
  'technique',
  'classification',
  'classList',
  'accuracy',
  'perClassRecall',
  'falsePositiveRate',
  'falseNegativeRate',
  'k',
  'scaling',
  'split',
  'zeroDay',
  'confusionMatrix',
  'config',
] as const;

export interface ConfusionBlock {
  rows: 'actual';
  columns: 'predicted';
  classList: string[];
  counts: number[][];
}

export interface MetricsDoc {
  schemaVersion: number;
  experimentId: number;
  technique: 'knn' | 'dl';
  classification: 'binary' | 'multiclass';
  classList: string[];
  accuracy: number;
  perClassRecall: Record<string, number>;
  falsePositiveRate: number | null;
  falseNegativeRate: number | null;
  k: number | null;
  scaling: string | null;
  split: Record<string, unknown> | null;
  zeroDay: boolean;
  confusionMatrix: ConfusionBlock;
  config: Record<string, unknown> | null;
}

/** Rows = actual class, columns = predicted class. */
export function confusionCounts(
  actual: number[],
  predicted: number[],
  numClasses: number,
): number[][] {
  if (actual.length !== predicted.length || actual.length === 0) {
    throw new SchemaMismatch(
      `need equal, non-empty label lists (got ${actual.length} / ${predicted.length})`,
    );
  }
  const counts = Array.from({ length: numClasses }, () => new Array<number>(numClasses).fill(0));
  for (let i = 0; i < actual.length; i++) {
    counts[actual[i]][predicted[i]] += 1;
  }
  return counts;
}

export interface BuildMetricsArgs {
  experimentId: number;
  classification: 'binary' | 'multiclass';
  classList: string[];
  actual: number[];
  predicted: number[];
  split: Record<string, unknown> | null;
  zeroDay: boolean;
  config: Record<string, unknown> | null;
}

export function buildMetricsDoc(args: BuildMetricsArgs): MetricsDoc {
  const n = args.classList.length;
  const counts = confusionCounts(args.actual, args.predicted, n);
  const total = args.actual.length;
  let correct = 0;
  for (let i = 0; i < n; i++) correct += counts[i][i];

  const perClassRecall: Record<string, number> = {};
  for (let i = 0; i < n; i++) {
    const rowSum = counts[i].reduce((a, b) => a + b, 0);
    perClassRecall[args.classList[i]] = rowSum ? counts[i][i] / rowSum : 0;
  }

  let falsePositiveRate: number | null = null;
  let falseNegativeRate: number | null = null;
  if (args.classification === 'binary') {
    if (n !== 2) {
      throw new SchemaMismatch(`binary report needs 2 classes, got ${n}`);
    }
    const benignTotal = counts[0][0] + counts[0][1];
    const malwareTotal = counts[1][0] + counts[1][1];
    falsePositiveRate = benignTotal ? counts[0][1] / benignTotal : 0;
    falseNegativeRate = malwareTotal ? counts[1][0] / malwareTotal : 0;
  }

  return {
    schemaVersion: METRICS_SCHEMA_VERSION,
    experimentId: args.experimentId,
    technique: 'dl',
    classification: args.classification,
    classList: [...args.classList],
    accuracy: correct / total,
    perClassRecall,
    falsePositiveRate,
    falseNegativeRate,
    k: null,
    scaling: null,
    split: args.split,
    zeroDay: args.zeroDay,
    confusionMatrix: {
      rows: 'actual',
      columns: 'predicted',
      classList: [...args.classList],
      counts,
    },
    config: args.config,
  };
}

export function validateMetricsDoc(doc: unknown): asserts doc is MetricsDoc {
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new SchemaMismatch('metrics document must be a JSON object');
  }
  const keys = Object.keys(doc);
  const expected = new Set<string>(METRICS_FIELDS);
  const missing = METRICS_FIELDS.filter((field) => !(field in doc));
  const extra = keys.filter((key) => !expected.has(key));
  if (missing.length || extra.length) {
    throw new SchemaMismatch(
      `metrics field set mismatch: missing=[${missing}] extra=[${extra}]`,
    );
  }
  const typed = doc as MetricsDoc;
  if (typed.schemaVersion !== METRICS_SCHEMA_VERSION) {
    throw new SchemaMismatch(`unsupported metrics schema version ${typed.schemaVersion}`);
  }
  const cm = typed.confusionMatrix;
  const cmKeys = ['rows', 'columns', 'classList', 'counts'];
  if (
    typeof cm !== 'object' ||
    cm === null ||
    JSON.stringify(Object.keys(cm).sort()) !== JSON.stringify([...cmKeys].sort())
  ) {
    throw new SchemaMismatch('confusionMatrix block malformed');
  }
  const n = cm.classList.length;
  if (cm.counts.length !== n || cm.counts.some((row) => row.length !== n)) {
    throw new SchemaMismatch('confusion counts are not square over classList');
  }
}

/** Serialize with the canonical key order (field order is part of the contract). */
export function metricsToJson(doc: MetricsDoc): string {
  const ordered: Record<string, unknown> = {};
  for (const field of METRICS_FIELDS) {
    ordered[field] = doc[field];
  }
  return `${JSON.stringify(ordered, null, 2)}\n`;
}
