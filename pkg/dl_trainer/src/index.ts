export {
  CorruptImage,
  DatasetError,
  DivergedTraining,
  DlTrainerError,
  MissingWeights,
  SchemaMismatch,
} from './errors.js';
export { decodeGrayPng } from './png.js';
export type { GrayImage } from './png.js';
export { mulberry32, shuffleInPlace } from './rng.js';
export {
  PLAN_SCHEMA_VERSION,
  disposeDataset,
  loadImageTensor,
  prepareDataset,
  readPlan,
} from './dataset.js';
export type { Dataset, PlanDoc, PrepareOptions } from './dataset.js';
export {
  DEFAULT_INPUT_SIZE,
  DEFAULT_PRESET,
  PRESETS,
  assembleModel,
  backboneMeta,
  buildBackbone,
  buildHead,
  partitionVariables,
} from './backbone.js';
export type { BackboneConfig, BackboneMeta, BackbonePreset, VariableGroups } from './backbone.js';
export { atomicWriteFile, loadModel, saveModel, writeJson } from './io.js';
export type { ModelMeta } from './io.js';
export {
  GROUP_RATE_DIVISORS,
  cosineRestartSchedule,
  cycleLengths,
  groupRates,
  restartSteps,
} from './schedule.js';
export { MomentumSgd, accuracyOf, softmaxLoss, trainableVars } from './optim.js';
export { epochBatches, gatherBatch } from './minibatch.js';
export {
  LR_FINDER_DEFAULTS,
  findLearningRate,
  probeRates,
  suggestRate,
  writeLrCurveCsv,
} from './lrfinder.js';
export type { LrCurvePoint, LrFinderOptions, LrFinderResult } from './lrfinder.js';
export { TRAIN_DEFAULTS, fineTune, writeHistoryCsv } from './train.js';
export type { EpochRow, FineTuneResult, TrainConfig } from './train.js';
export {
  METRICS_FIELDS,
  METRICS_SCHEMA_VERSION,
  buildMetricsDoc,
  confusionCounts,
  metricsToJson,
  validateMetricsDoc,
} from './metrics.js';
export type { BuildMetricsArgs, ConfusionBlock, MetricsDoc } from './metrics.js';
export { evaluateModel, predictLabels, renderMetrics, writeMetricsDoc } from './evaluate.js';
