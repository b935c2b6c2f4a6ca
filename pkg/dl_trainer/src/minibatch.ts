/** Deterministic minibatch drawing over in-memory tensors. */

import * as tf from '@tensorflow/tfjs';

import { mulberry32, shuffleInPlace } from './rng.js';

/** Index batches for one seeded pass over n examples. */
export function epochBatches(n: number, batchSize: number, seed: number): number[][] {
  if (n < 1 || batchSize < 1) {
    throw new Error(`need n >= 1 and batchSize >= 1, got ${n} / ${batchSize}`);
  }
  const order = Array.from({ length: n }, (_, i) => i);
  shuffleInPlace(order, mulberry32(seed));
  const batches: number[][] = [];
  for (let start = 0; start < n; start += batchSize) {
    batches.push(order.slice(start, start + batchSize));
  }
  return batches;
}

/** Rows of xs/ys at the given indices (caller disposes both tensors). */
export function gatherBatch<X extends tf.Tensor>(
  xs: X,
  ys: tf.Tensor2D,
  indices: number[],
): { x: X; y: tf.Tensor2D } {
  return tf.tidy(() => {
    const idx = tf.tensor1d(indices, 'int32');
    return { x: tf.gather(xs, idx) as X, y: tf.gather(ys, idx) as tf.Tensor2D };
  });
}
