/** Custom SGD-with-momentum step supporting per-variable learning rates.
 *
 * The stock optimizers apply one rate to every variable; differential
 * fine-tuning needs a different rate per layer group, so the update is
 * done by hand: v <- momentum * v - rate * grad; w <- w + v.
 */

import * as tf from '@tensorflow/tfjs';

export function trainableVars(layer: tf.layers.Layer | tf.LayersModel): tf.Variable[] {
  // LayerVariable.val (the raw tf.Variable) is typed protected but is
  // the only handle usable with tf.variableGrads.
  return layer.trainableWeights.map(
    (weight) => (weight as unknown as { val: tf.Variable }).val,
  );
}

export function softmaxLoss(labels: tf.Tensor2D, logits: tf.Tensor2D): tf.Scalar {
  return tf.losses.softmaxCrossEntropy(labels, logits) as tf.Scalar;
}

export function accuracyOf(labels: tf.Tensor2D, logits: tf.Tensor2D): number {
  return tf.tidy(() =>
    tf
      .equal(tf.argMax(logits, 1), tf.argMax(labels, 1))
      .mean()
      .dataSync()[0],
  );
}

export class MomentumSgd {
  private readonly velocities = new Map<string, tf.Tensor>();

  constructor(private readonly momentum: number) {}

  /**
   * One update step. Returns the pre-step loss on the minibatch.
   * `rateFor` maps a variable name to its learning rate for this step.
   */
  step(
    lossFn: () => tf.Scalar,
    variables: tf.Variable[],
    rateFor: (name: string) => number,
  ): number {
    const { value, grads } = tf.variableGrads(lossFn, variables);
    const loss = value.dataSync()[0];
    value.dispose();
    for (const variable of variables) {
      const grad = grads[variable.name];
      if (!grad) {
        continue;
      }
      const rate = rateFor(variable.name);
      const previous = this.velocities.get(variable.name);
      const velocity = tf.tidy(() => {
        const carried = previous ?? tf.zerosLike(grad);
        return tf.sub(tf.mul(carried, this.momentum), tf.mul(grad, rate));
      });
      previous?.dispose();
      this.velocities.set(variable.name, velocity);
      tf.tidy(() => variable.assign(tf.add(variable, velocity)));
      grad.dispose();
    }
    return loss;
  }

  dispose(): void {
    for (const velocity of this.velocities.values()) {
      velocity.dispose();
    }
    this.velocities.clear();
  }
}
