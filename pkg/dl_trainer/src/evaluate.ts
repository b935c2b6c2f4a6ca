/** Scoring a trained classifier and emitting the shared metrics report. */

import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { Dataset, PlanDoc } from './dataset.js';
import { atomicWriteFile } from './io.js';
import { MetricsDoc, buildMetricsDoc, metricsToJson, validateMetricsDoc } from './metrics.js';

/** Predicted class index per sample, in dataset order. */
export function predictLabels(model: tf.LayersModel, dataset: Dataset): number[] {
  return tf.tidy(() => {
    const logits = model.predict(dataset.xs, { batchSize: 64 }) as tf.Tensor2D;
    return Array.from(tf.argMax(logits, 1).dataSync());
  });
}

export function evaluateModel(
  model: tf.LayersModel,
  dataset: Dataset,
  plan: PlanDoc,
  config: Record<string, unknown> | null = null,
): MetricsDoc {
  const predicted = predictLabels(model, dataset);
  const doc = buildMetricsDoc({
    experimentId: plan.experimentId,
    classification: plan.classification,
    classList: dataset.classList,
    actual: dataset.labels,
    predicted,
    split: plan.split,
    zeroDay: plan.zeroDay,
    config,
  });
  validateMetricsDoc(doc);
  return doc;
}

/** Writes <outDir>/dl_metrics.json atomically; returns the path. */
export function writeMetricsDoc(outDir: string, doc: MetricsDoc): string {
  const path = join(outDir, 'dl_metrics.json');
  atomicWriteFile(path, metricsToJson(doc));
  return path;
}

/** Terminal-friendly one-screen summary. */
export function renderMetrics(doc: MetricsDoc): string {
  const lines = [
    `Experiment ${doc.experimentId} (${doc.technique}, ${doc.classification})`,
    `Accuracy: ${(doc.accuracy * 100).toFixed(2)}%`,
  ];
  if (doc.falsePositiveRate !== null) {
    lines.push(`False positive rate: ${(doc.falsePositiveRate * 100).toFixed(2)}%`);
  }
  if (doc.falseNegativeRate !== null) {
    lines.push(`False negative rate: ${(doc.falseNegativeRate * 100).toFixed(2)}%`);
  }
  for (const [name, recall] of Object.entries(doc.perClassRecall)) {
    lines.push(`Recall[${name}]: ${(recall * 100).toFixed(2)}%`);
  }
  return `${lines.join('\n')}\n`;
}
