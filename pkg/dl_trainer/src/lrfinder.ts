/** Learning-rate range test.
 *
 * Rates are probed on a log-spaced grid from 10^minExponent to
 * 10^maxExponent. Each probe takes a single SGD step on the next
 * minibatch at that rate, recording the pre-step loss, so the curve
 * shows how the loss responds as the rate grows. The suggested rate is
 * the one whose step produced the steepest drop in loss. The model's
 * weights are restored afterwards, so probing is side-effect free.
 */

import * as tf from '@tensorflow/tfjs';

import { Dataset } from './dataset.js';
import { atomicWriteFile } from './io.js';
import { epochBatches, gatherBatch } from './minibatch.js';
import { MomentumSgd, softmaxLoss, trainableVars } from './optim.js';

export interface LrFinderOptions {
  /** log10 of the smallest probed rate. */
  minExponent?: number;
  /** log10 of the largest probed rate. */
  maxExponent?: number;
  /** Number of rates on the log grid. */
  probes?: number;
  batchSize?: number;
  momentum?: number;
  seed?: number;
}

export interface LrCurvePoint {
  rate: number;
  loss: number;
}

export interface LrFinderResult {
  curve: LrCurvePoint[];
  suggestion: number;
}

export const LR_FINDER_DEFAULTS = {
  minExponent: -5,
  maxExponent: 0,
  probes: 30,
  batchSize: 16,
  momentum: 0.9,
  seed: 0,
} as const;

/** The log-spaced grid of rates the finder will probe. */
export function probeRates(minExponent: number, maxExponent: number, probes: number): number[] {
  if (probes < 2 || minExponent >= maxExponent) {
    throw new Error(
      `need probes >= 2 and minExponent < maxExponent, got ${probes} / [${minExponent}, ${maxExponent}]`,
    );
  }
  return Array.from({ length: probes }, (_, i) =>
    10 ** (minExponent + (i * (maxExponent - minExponent)) / (probes - 1)),
  );
}

export function findLearningRate(
  model: tf.LayersModel,
  dataset: Dataset,
  options: LrFinderOptions = {},
): LrFinderResult {
  const opts = { ...LR_FINDER_DEFAULTS, ...options };
  const rates = probeRates(opts.minExponent, opts.maxExponent, opts.probes);
  const batches = epochBatches(dataset.labels.length, opts.batchSize, opts.seed);
  const variables = trainableVars(model);
  const sgd = new MomentumSgd(opts.momentum);
  const snapshot = model.getWeights().map((weight) => weight.clone());

  const curve: LrCurvePoint[] = [];
  try {
    for (let i = 0; i < rates.length; i++) {
      const rate = rates[i];
      const { x, y } = gatherBatch(dataset.xs, dataset.ys, batches[i % batches.length]);
      const loss = sgd.step(
        () => softmaxLoss(y, model.apply(x, { training: true }) as tf.Tensor2D),
        variables,
        () => rate,
      );
      x.dispose();
      y.dispose();
      if (!Number.isFinite(loss)) {
        break; // the sweep has diverged; higher rates would only stay non-finite
      }
      curve.push({ rate, loss });
    }
  } finally {
    model.setWeights(snapshot);
    snapshot.forEach((weight) => weight.dispose());
    sgd.dispose();
  }

  return { curve, suggestion: suggestRate(curve) };
}

/**
 * Rate at the steepest loss descent between consecutive probes. If no
 * probe lowered the loss, fall back to a tenth of the lowest-loss rate
 * (floored at the smallest probed rate).
 */
export function suggestRate(curve: LrCurvePoint[]): number {
  if (curve.length === 0) {
    throw new Error('cannot suggest a rate from an empty curve');
  }
  let bestIndex = -1;
  let bestDrop = 0;
  for (let i = 0; i + 1 < curve.length; i++) {
    const drop = curve[i + 1].loss - curve[i].loss;
    if (drop < bestDrop) {
      bestDrop = drop;
      bestIndex = i;
    }
  }
  if (bestIndex >= 0) {
    return curve[bestIndex].rate;
  }
  let lowest = 0;
  for (let i = 1; i < curve.length; i++) {
    if (curve[i].loss < curve[lowest].loss) {
      lowest = i;
    }
  }
  return Math.max(curve[lowest].rate / 10, curve[0].rate);
}

/** One row per probed rate, in probe order. */
export function writeLrCurveCsv(path: string, curve: LrCurvePoint[]): void {
  const lines = ['rate,loss', ...curve.map((point) => `${point.rate},${point.loss}`)];
  atomicWriteFile(path, `${lines.join('\n')}\n`);
}
