/** Residual backbone construction and the classification head.
 *
 * The default is a 34-layer-style stack of basic residual blocks
 * ([3,4,6,3]); smaller presets exist so CPU-only runs and tests stay
 * tractable. All initializers are explicitly seeded, so building twice
 * with the same seed yields bitwise-identical starting weights.
 *
 * Layer names encode the fine-tuning groups: "stem_*" and "s<i>b<j>_*"
 * are backbone, "head_*" is the replaceable classifier. For
 * differential learning rates the backbone splits into an early half
 * (stem + first stages) and a late half (remaining stages).
 */

import * as tf from '@tensorflow/tfjs';

export interface BackbonePreset {
  /** Basic residual blocks per stage. */
  blocks: number[];
  /** Convolution widths per stage. */
  widths: number[];
}

/** Layer count = 2 + 2 * sum(blocks) convolutions, hence the names. */
export const PRESETS: Record<string, BackbonePreset> = {
  resnet34: { blocks: [3, 4, 6, 3], widths: [32, 64, 128, 256] },
  resnet18: { blocks: [2, 2, 2, 2], widths: [32, 64, 128, 256] },
  resnet10: { blocks: [1, 1, 1, 1], widths: [8, 16, 24, 32] },
  resnet6: { blocks: [1, 1], widths: [8, 16] },
};

export const DEFAULT_PRESET = 'resnet34';
export const DEFAULT_INPUT_SIZE = 64;

export interface BackboneConfig {
  preset: string;
  inputSize: number;
  seed: number;
}

export interface BackboneMeta extends BackboneConfig {
  featureDim: number;
  stageCount: number;
}

function presetOf(name: string): BackbonePreset {
  const preset = PRESETS[name];
  if (!preset) {
    throw new Error(`unknown backbone preset '${name}' (have: ${Object.keys(PRESETS)})`);
  }
  return preset;
}

/**
 * The underlying library treats an initializer seed of 0 as "no seed"
 * and substitutes entropy, so the user-facing seed is mapped through a
 * large odd stride that never lands on 0 for any layer.
 */
function layerSeed(seed: number, index: number): number {
  return seed * 1_000_003 + 1 + index;
}

class SeededInit {
  private counter = 0;

  constructor(private readonly seed: number) {}

  next(): ReturnType<typeof tf.initializers.heNormal> {
    return tf.initializers.heNormal({ seed: layerSeed(this.seed, this.counter++) });
  }
}

function convBn(
  x: tf.SymbolicTensor,
  filters: number,
  stride: number,
  name: string,
  init: SeededInit,
): tf.SymbolicTensor {
  const conv = tf.layers
    .conv2d({
      filters,
      kernelSize: 3,
      strides: stride,
      padding: 'same',
      useBias: false,
      kernelInitializer: init.next(),
      name: `${name}_conv`,
    })
    .apply(x) as tf.SymbolicTensor;
  return tf.layers.batchNormalization({ name: `${name}_bn` }).apply(conv) as tf.SymbolicTensor;
}

function basicBlock(
  x: tf.SymbolicTensor,
  filters: number,
  downsample: boolean,
  name: string,
  init: SeededInit,
): tf.SymbolicTensor {
  const stride = downsample ? 2 : 1;
  let out = convBn(x, filters, stride, `${name}a`, init);
  out = tf.layers.reLU({ name: `${name}a_relu` }).apply(out) as tf.SymbolicTensor;
  out = convBn(out, filters, 1, `${name}b`, init);

  let shortcut = x;
  if (downsample || x.shape[x.shape.length - 1] !== filters) {
    const projected = tf.layers
      .conv2d({
        filters,
        kernelSize: 1,
        strides: stride,
        useBias: false,
        kernelInitializer: init.next(),
        name: `${name}_proj`,
      })
      .apply(x) as tf.SymbolicTensor;
    shortcut = tf.layers
      .batchNormalization({ name: `${name}_proj_bn` })
      .apply(projected) as tf.SymbolicTensor;
  }
  const added = tf.layers.add({ name: `${name}_add` }).apply([out, shortcut]) as tf.SymbolicTensor;
  return tf.layers.reLU({ name: `${name}_relu` }).apply(added) as tf.SymbolicTensor;
}

/** Input [size, size, 3] -> pooled feature vector. */
export function buildBackbone(config: BackboneConfig): tf.LayersModel {
  const preset = presetOf(config.preset);
  const init = new SeededInit(config.seed);

  const input = tf.input({ shape: [config.inputSize, config.inputSize, 3], name: 'image' });
  let x = convBn(input, preset.widths[0], 1, 'stem', init);
  x = tf.layers.reLU({ name: 'stem_relu' }).apply(x) as tf.SymbolicTensor;

  for (let stage = 0; stage < preset.blocks.length; stage++) {
    for (let block = 0; block < preset.blocks[stage]; block++) {
      const downsample = stage > 0 && block === 0;
      x = basicBlock(x, preset.widths[stage], downsample, `s${stage}b${block}`, init);
    }
  }
  const features = tf.layers
    .globalAveragePooling2d({ name: 'features' })
    .apply(x) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: features, name: `backbone_${config.preset}` });
}

export function backboneMeta(config: BackboneConfig): BackboneMeta {
  const preset = presetOf(config.preset);
  return {
    ...config,
    featureDim: preset.widths[preset.widths.length - 1],
    stageCount: preset.blocks.length,
  };
}

/**
 * The replaced classifier: features -> batch norm -> class logits.
 *
 * The normalization layer is essential: pooled features from the
 * backbone are poorly conditioned for a plain softmax regression, and
 * normalizing them lets the head converge within the first epoch. Its
 * momentum is lowered so the moving statistics used at inference catch
 * up within a short run.
 */
export function buildHead(featureDim: number, numClasses: number, seed: number): tf.layers.Layer {
  return tf.sequential({
    name: 'head',
    layers: [
      tf.layers.batchNormalization({ momentum: 0.8, inputShape: [featureDim], name: 'head_bn' }),
      tf.layers.dense({
        units: numClasses,
        useBias: true,
        kernelInitializer: tf.initializers.glorotUniform({ seed: layerSeed(seed, 0) }),
        name: 'head_dense',
      }),
    ],
  });
}

/** Backbone + head as one trainable graph (logits out). */
export function assembleModel(backbone: tf.LayersModel, head: tf.layers.Layer): tf.LayersModel {
  const logits = head.apply(backbone.outputs[0]) as tf.SymbolicTensor;
  return tf.model({ inputs: backbone.inputs, outputs: logits, name: 'classifier' });
}

export interface VariableGroups {
  head: tf.Variable[];
  /** Later backbone stages (task-specific features). */
  middle: tf.Variable[];
  /** Stem plus early stages (generic features). */
  early: tf.Variable[];
}

/** Partition trainable variables by layer-name convention. */
export function partitionVariables(model: tf.LayersModel, stageCount: number): VariableGroups {
  const lateStages = new Set<string>();
  for (let stage = Math.floor(stageCount / 2); stage < stageCount; stage++) {
    lateStages.add(`s${stage}`);
  }
  const groups: VariableGroups = { head: [], middle: [], early: [] };
  for (const weight of model.trainableWeights) {
    // LayerVariable.val (the raw tf.Variable) is typed protected but is
    // the only handle usable with tf.variableGrads.
    const variable = (weight as unknown as { val: tf.Variable }).val;
    const name = weight.name;
    if (name.startsWith('head_')) {
      groups.head.push(variable);
    } else if ([...lateStages].some((prefix) => name.startsWith(prefix))) {
      groups.middle.push(variable);
    } else {
      groups.early.push(variable);
    }
  }
  return groups;
}
