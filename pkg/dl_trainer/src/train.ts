/** Two-phase fine-tuning of a pretrained backbone.
 *
 * Phase 1 ("frozen"): only the freshly attached head trains, on
 * features computed by the backbone in inference mode. The backbone's
 * weights — including batch-norm moving statistics — are bitwise
 * untouched during this phase.
 *
 * Phase 2 ("finetune"): the whole graph trains with differential
 * learning rates (head : middle : early = 1 : 1/3 : 1/9 of the
 * scheduled rate) under cosine annealing with warm restarts. Batch-norm
 * layers stay in inference mode here — their statistics are frozen and
 * only the learned scale/shift parameters receive gradients — so
 * unfreezing does not yank the representation out from under the head.
 *
 * The weights kept at the end are those of the epoch with the best
 * validation accuracy (earliest epoch wins ties).
 */

import * as tf from '@tensorflow/tfjs';

import { assembleModel, buildHead, partitionVariables } from './backbone.js';
import { Dataset } from './dataset.js';
import { DivergedTraining, SchemaMismatch } from './errors.js';
import { atomicWriteFile, loadModel, ModelMeta } from './io.js';
import { epochBatches, gatherBatch } from './minibatch.js';
import { MomentumSgd, accuracyOf, softmaxLoss, trainableVars } from './optim.js';
import { GROUP_RATE_DIVISORS, cosineRestartSchedule } from './schedule.js';

export interface TrainConfig {
  /** Total epochs across both phases. */
  epochs?: number;
  /** Leading epochs during which the backbone stays frozen. */
  freezePhaseEpochs?: number;
  batchSize?: number;
  /** Head-group learning rate; other groups train at 1/3 and 1/9 of it. */
  baseRate?: number;
  /** Warm-restart cycles across the unfrozen phase. */
  cycles?: number;
  minRate?: number;
  momentum?: number;
  seed?: number;
}

export const TRAIN_DEFAULTS = {
  epochs: 5,
  freezePhaseEpochs: 1,
  batchSize: 16,
  baseRate: 0.01,
  cycles: 2,
  minRate: 0,
  momentum: 0.9,
  seed: 0,
} as const;

export interface EpochRow {
  epoch: number;
  phase: 'frozen' | 'finetune';
  loss: number;
  accuracy: number;
  valLoss: number;
  valAccuracy: number;
}

export interface FineTuneResult {
  /** Full graph (backbone + head) holding the best-epoch weights. */
  model: tf.LayersModel;
  backbone: tf.LayersModel;
  meta: ModelMeta;
  history: EpochRow[];
  bestEpoch: number;
  bestValAccuracy: number;
  /** Per-step base rates used in the unfrozen phase. */
  schedule: number[];
}

function resolved(config: TrainConfig): Required<TrainConfig> {
  const cfg = { ...TRAIN_DEFAULTS, ...config };
  if (cfg.epochs < 1 || cfg.batchSize < 1 || !(cfg.baseRate > 0)) {
    throw new Error(`need epochs >= 1, batchSize >= 1, baseRate > 0 (got ${JSON.stringify(cfg)})`);
  }
  if (cfg.freezePhaseEpochs < 0) {
    throw new Error(`freezePhaseEpochs must be >= 0, got ${cfg.freezePhaseEpochs}`);
  }
  return { ...cfg, freezePhaseEpochs: Math.min(cfg.freezePhaseEpochs, cfg.epochs) };
}

function inferenceMetrics(
  logitsOf: () => tf.Tensor2D,
  ys: tf.Tensor2D,
): { loss: number; accuracy: number } {
  return tf.tidy(() => {
    const logits = logitsOf();
    return {
      loss: softmaxLoss(ys, logits).dataSync()[0],
      accuracy: accuracyOf(ys, logits),
    };
  });
}

function checkFinite(loss: number, epoch: number): void {
  if (!Number.isFinite(loss)) {
    throw new DivergedTraining(`non-finite training loss at epoch ${epoch}; lower the rate`);
  }
}

/** Let the event loop breathe between synchronous training steps. */
const yieldLoop = (): Promise<void> => new Promise((resolve) => setImmediate(resolve));

export async function fineTune(
  pretrainedDir: string,
  train: Dataset,
  val: Dataset,
  config: TrainConfig = {},
): Promise<FineTuneResult> {
  const cfg = resolved(config);
  const { model: backbone, meta } = await loadModel(pretrainedDir);
  if (meta.inputSize !== train.inputSize || meta.inputSize !== val.inputSize) {
    throw new SchemaMismatch(
      `backbone expects ${meta.inputSize}x${meta.inputSize} input, datasets use ` +
        `${train.inputSize}/${val.inputSize}`,
    );
  }
  if (JSON.stringify(train.classList) !== JSON.stringify(val.classList)) {
    throw new SchemaMismatch('train and validation datasets disagree on the class list');
  }

  const head = buildHead(meta.featureDim, train.classList.length, cfg.seed);
  const n = train.labels.length;
  const history: EpochRow[] = [];
  let bestEpoch = 0;
  let bestValAccuracy = -1;
  let bestWeights: tf.Tensor[] | null = null;

  const snapshotIfBest = (epoch: number, valAccuracy: number) => {
    if (valAccuracy > bestValAccuracy) {
      bestValAccuracy = valAccuracy;
      bestEpoch = epoch;
      bestWeights?.forEach((weight) => weight.dispose());
      bestWeights = [...backbone.getWeights(), ...head.getWeights()].map((w) => w.clone());
    }
  };

  // Phase 1: train the head on cached inference-mode features.
  if (cfg.freezePhaseEpochs > 0) {
    const trainFeatures = backbone.predict(train.xs, { batchSize: 64 }) as tf.Tensor2D;
    const valFeatures = backbone.predict(val.xs, { batchSize: 64 }) as tf.Tensor2D;
    const headVars = trainableVars(head);
    const sgd = new MomentumSgd(cfg.momentum);
    try {
      for (let epoch = 1; epoch <= cfg.freezePhaseEpochs; epoch++) {
        for (const batch of epochBatches(n, cfg.batchSize, cfg.seed * 1000 + epoch)) {
          const { x, y } = gatherBatch(trainFeatures, train.ys, batch);
          const loss = sgd.step(
            () => softmaxLoss(y, head.apply(x, { training: true }) as tf.Tensor2D),
            headVars,
            () => cfg.baseRate,
          );
          x.dispose();
          y.dispose();
          checkFinite(loss, epoch);
          await yieldLoop();
        }
        const trainStats = inferenceMetrics(
          () => head.apply(trainFeatures) as tf.Tensor2D,
          train.ys,
        );
        const valStats = inferenceMetrics(() => head.apply(valFeatures) as tf.Tensor2D, val.ys);
        history.push({ epoch, phase: 'frozen', ...renameStats(trainStats, valStats) });
        snapshotIfBest(epoch, valStats.accuracy);
      }
    } finally {
      trainFeatures.dispose();
      valFeatures.dispose();
      sgd.dispose();
    }
  }

  // Phase 2: unfreeze everything under differential rates.
  const model = assembleModel(backbone, head);
  const unfrozenEpochs = cfg.epochs - cfg.freezePhaseEpochs;
  const stepsPerEpoch = Math.ceil(n / cfg.batchSize);
  const schedule =
    unfrozenEpochs > 0
      ? cosineRestartSchedule(cfg.baseRate, unfrozenEpochs * stepsPerEpoch, cfg.cycles, cfg.minRate)
      : [];
  if (unfrozenEpochs > 0) {
    const groups = partitionVariables(model, meta.stageCount);
    const divisorByName = new Map<string, number>();
    for (const variable of groups.head) divisorByName.set(variable.name, GROUP_RATE_DIVISORS.head);
    for (const variable of groups.middle)
      divisorByName.set(variable.name, GROUP_RATE_DIVISORS.middle);
    for (const variable of groups.early)
      divisorByName.set(variable.name, GROUP_RATE_DIVISORS.early);
    const allVars = [...groups.head, ...groups.middle, ...groups.early];
    const sgd = new MomentumSgd(cfg.momentum);
    let step = 0;
    try {
      for (let epoch = cfg.freezePhaseEpochs + 1; epoch <= cfg.epochs; epoch++) {
        for (const batch of epochBatches(n, cfg.batchSize, cfg.seed * 1000 + epoch)) {
          const { x, y } = gatherBatch(train.xs, train.ys, batch);
          const scheduled = schedule[step++];
          const loss = sgd.step(
            () => softmaxLoss(y, model.apply(x) as tf.Tensor2D),
            allVars,
            (name) => scheduled / (divisorByName.get(name) ?? GROUP_RATE_DIVISORS.early),
          );
          x.dispose();
          y.dispose();
          checkFinite(loss, epoch);
          await yieldLoop();
        }
        const trainStats = inferenceMetrics(
          () => model.predict(train.xs, { batchSize: 64 }) as tf.Tensor2D,
          train.ys,
        );
        const valStats = inferenceMetrics(
          () => model.predict(val.xs, { batchSize: 64 }) as tf.Tensor2D,
          val.ys,
        );
        history.push({ epoch, phase: 'finetune', ...renameStats(trainStats, valStats) });
        snapshotIfBest(epoch, valStats.accuracy);
      }
    } finally {
      sgd.dispose();
    }
  }

  if (bestWeights !== null) {
    const kept: tf.Tensor[] = bestWeights;
    const backboneCount = backbone.getWeights().length;
    backbone.setWeights(kept.slice(0, backboneCount));
    head.setWeights(kept.slice(backboneCount));
    kept.forEach((weight) => weight.dispose());
  }

  return { model, backbone, meta, history, bestEpoch, bestValAccuracy, schedule };
}

function renameStats(
  trainStats: { loss: number; accuracy: number },
  valStats: { loss: number; accuracy: number },
): Pick<EpochRow, 'loss' | 'accuracy' | 'valLoss' | 'valAccuracy'> {
  return {
    loss: trainStats.loss,
    accuracy: trainStats.accuracy,
    valLoss: valStats.loss,
    valAccuracy: valStats.accuracy,
  };
}

/** One row per epoch, both phases, in order. */
export function writeHistoryCsv(path: string, history: EpochRow[]): void {
  const lines = [
    'epoch,phase,loss,accuracy,valLoss,valAccuracy',
    ...history.map(
      (row) =>
        `${row.epoch},${row.phase},${row.loss},${row.accuracy},${row.valLoss},${row.valAccuracy}`,
    ),
  ];
  atomicWriteFile(path, `${lines.join('\n')}\n`);
}
