import { readFileSync } from 'node:fs';

import { describe, expect, it } from 'vitest';

import { SchemaMismatch } from '../src/errors.js';
import {
  METRICS_FIELDS,
  MetricsDoc,
  buildMetricsDoc,
  confusionCounts,
  metricsToJson,
  validateMetricsDoc,
} from '../src/metrics.js';

const PRIMARY_SCHEMA_PATH = new URL('../../schema/metrics.schema.json', import.meta.url).pathname;

function binaryDoc(): MetricsDoc {
  return buildMetricsDoc({
    experimentId: 5,
    classification: 'binary',
    classList: ['benign', 'malware'],
    actual: [0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
    predicted: [0, 0, 0, 1, 1, 1, 1, 1, 0, 1],
    split: { trainFraction: 0.8, seed: 0 },
    zeroDay: false,
    config: { inputSize: 16 },
  });
}

describe('confusionCounts', () => {
  it('tallies rows as actual and columns as predicted', () => {
    const counts = confusionCounts([0, 0, 1, 1, 1], [0, 1, 1, 1, 0], 2);
    expect(counts).toEqual([
      [1, 1],
      [1, 2],
    ]);
  });

  it('rejects mismatched or empty label lists', () => {
    expect(() => confusionCounts([0], [0, 1], 2)).toThrowError(SchemaMismatch);
    expect(() => confusionCounts([], [], 2)).toThrowError(SchemaMismatch);
  });
});

describe('buildMetricsDoc', () => {
  it('computes accuracy, recalls and binary error rates by hand-checked counts', () => {
    const doc = binaryDoc();
    // benign: 3 of 4 right; malware: 5 of 6 right.
    expect(doc.accuracy).toBeCloseTo(0.8, 12);
    expect(doc.perClassRecall.benign).toBeCloseTo(3 / 4, 12);
    expect(doc.perClassRecall.malware).toBeCloseTo(5 / 6, 12);
    expect(doc.falsePositiveRate).toBeCloseTo(1 / 4, 12);
    expect(doc.falseNegativeRate).toBeCloseTo(1 / 6, 12);
    expect(doc.confusionMatrix.counts).toEqual([
      [3, 1],
      [1, 5],
    ]);
    expect(doc.technique).toBe('dl');
    expect(doc.k).toBeNull();
    expect(doc.scaling).toBeNull();
  });

  it('leaves binary rates null for multiclass reports', () => {
    const doc = buildMetricsDoc({
      experimentId: 2,
      classification: 'multiclass',
      classList: ['a', 'b', 'c'],
      actual: [0, 1, 2],
      predicted: [0, 1, 1],
      split: null,
      zeroDay: false,
      config: null,
    });
    expect(doc.falsePositiveRate).toBeNull();
    expect(doc.falseNegativeRate).toBeNull();
    expect(doc.accuracy).toBeCloseTo(2 / 3, 12);
  });

  it('rejects a binary report without exactly two classes', () => {
    expect(() =>
      buildMetricsDoc({
        experimentId: 1,
        classification: 'binary',
        classList: ['a', 'b', 'c'],
        actual: [0, 1, 2],
        predicted: [0, 1, 2],
        split: null,
        zeroDay: false,
        config: null,
      }),
    ).toThrowError(SchemaMismatch);
  });
});

describe('validateMetricsDoc', () => {
  it('accepts a built document', () => {
    expect(() => validateMetricsDoc(binaryDoc())).not.toThrow();
  });

  it('rejects a missing field', () => {
    const doc = binaryDoc() as unknown as Record<string, unknown>;
    delete doc.accuracy;
    expect(() => validateMetricsDoc(doc)).toThrowError(SchemaMismatch);
  });

  it('rejects an extra field', () => {
    const doc = binaryDoc() as unknown as Record<string, unknown>;
    doc.comment = 'nope';
    expect(() => validateMetricsDoc(doc)).toThrowError(SchemaMismatch);
  });

  it('rejects non-square confusion counts', () => {
    const doc = binaryDoc();
    doc.confusionMatrix.counts = [[1, 2]];
    expect(() => validateMetricsDoc(doc)).toThrowError(SchemaMismatch);
  });

  it('rejects a wrong schema version', () => {
    const doc = binaryDoc();
    (doc as { schemaVersion: number }).schemaVersion = 99;
    expect(() => validateMetricsDoc(doc)).toThrowError(SchemaMismatch);
  });
});

describe('compatibility with the shared metrics schema', () => {
  const schema = JSON.parse(readFileSync(PRIMARY_SCHEMA_PATH, 'utf-8')) as {
    required: string[];
    properties: Record<string, unknown>;
    additionalProperties: boolean;
  };

  it('emits exactly the schema-required field set', () => {
    expect([...METRICS_FIELDS].sort()).toEqual([...schema.required].sort());
    expect(Object.keys(schema.properties).sort()).toEqual([...METRICS_FIELDS].sort());
    expect(schema.additionalProperties).toBe(false);
  });

  it('serializes keys in the canonical order', () => {
    const doc = binaryDoc();
    const keys = Object.keys(JSON.parse(metricsToJson(doc)) as Record<string, unknown>);
    expect(keys).toEqual([...METRICS_FIELDS]);
  });

  it('round-trips through JSON byte-for-byte', () => {
    const doc = binaryDoc();
    const once = metricsToJson(doc);
    const twice = metricsToJson(JSON.parse(once) as MetricsDoc);
    expect(twice).toBe(once);
  });
});
