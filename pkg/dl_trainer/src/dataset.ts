/** Dataset preparation: plan JSON + class-foldered PNG trees -> tensors.
 *
 * Images arrive as variable-height grayscale byte-images. Each is
 * rescaled to [0, 1], bilinearly resized to the backbone's square input
 * size, and replicated to three channels. Sample order is
 * deterministic: classes in plan order, filenames sorted within each.
 */

import { readFileSync, readdirSync, existsSync, statSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { DatasetError, SchemaMismatch } from './errors.js';
import { decodeGrayPng } from './png.js';

export const PLAN_SCHEMA_VERSION = 1;

export interface PlanDoc {
  schemaVersion: number;
  experimentId: number;
  classification: 'binary' | 'multiclass';
  technique: string;
  classList: string[];
  zeroDay: boolean;
  split: Record<string, unknown> | null;
  trainSampleIds: string[];
  testSampleIds: string[];
}

export interface Dataset {
  /** [n, size, size, 3] floats in [0, 1]. */
  xs: tf.Tensor4D;
  /** One-hot labels, [n, numClasses]. */
  ys: tf.Tensor2D;
  /** Integer class index per sample. */
  labels: number[];
  /** Source file per sample, aligned with labels. */
  files: string[];
  classList: string[];
  inputSize: number;
}

export function readPlan(runDir: string): PlanDoc {
  const path = join(runDir, 'plan.json');
  if (!existsSync(path)) {
    throw new DatasetError(`${runDir}: no plan.json in run directory`);
  }
  const doc = JSON.parse(readFileSync(path, 'utf-8')) as PlanDoc;
  if (doc.schemaVersion !== PLAN_SCHEMA_VERSION) {
    throw new SchemaMismatch(`${path}: unsupported plan schema ${doc.schemaVersion}`);
  }
  if (!Array.isArray(doc.classList) || doc.classList.length < 2) {
    throw new SchemaMismatch(`${path}: classList must name at least two classes`);
  }
  return doc;
}

function listClassDirs(sideDir: string): string[] {
  return readdirSync(sideDir)
    .filter((entry) => statSync(join(sideDir, entry)).isDirectory())
    .sort();
}

/** Decode one PNG file into a [size, size, 3] tensor in [0, 1]. */
export function loadImageTensor(path: string, inputSize: number): tf.Tensor3D {
  const image = decodeGrayPng(readFileSync(path), path);
  return tf.tidy(() => {
    const gray = tf
      .tensor3d(new Float32Array(image.pixels), [image.height, image.width, 1])
      .div<tf.Tensor3D>(255);
    const resized = tf.image.resizeBilinear(gray, [inputSize, inputSize]);
    return tf.tile<tf.Tensor3D>(resized, [1, 1, 3]);
  });
}

export interface PrepareOptions {
  inputSize: number;
  /** Cap per class, applied after sorting (for reduced-size runs). */
  maxPerClass?: number;
}

/**
 * Load one side ("train" or "test") of a materialized run directory.
 * The on-disk class folders must match the plan's class list exactly.
 */
export function prepareDataset(
  runDir: string,
  side: 'train' | 'test',
  plan: PlanDoc,
  options: PrepareOptions,
): Dataset {
  const sideDir = join(runDir, 'images', side);
  if (!existsSync(sideDir)) {
    throw new DatasetError(`${sideDir}: image tree side is missing`);
  }
  const onDisk = listClassDirs(sideDir);
  const expected = [...plan.classList].sort();
  if (JSON.stringify(onDisk) !== JSON.stringify(expected)) {
    throw new DatasetError(
      `${sideDir}: class folders [${onDisk}] do not match plan classList [${expected}]`,
    );
  }

  const files: string[] = [];
  const labels: number[] = [];
  for (let classIndex = 0; classIndex < plan.classList.length; classIndex++) {
    const classDir = join(sideDir, plan.classList[classIndex]);
    let names = readdirSync(classDir)
      .filter((name) => name.endsWith('.png'))
      .sort();
    if (names.length === 0) {
      throw new DatasetError(`${classDir}: class has no images`);
    }
    if (options.maxPerClass !== undefined) {
      names = names.slice(0, options.maxPerClass);
    }
    for (const name of names) {
      files.push(join(classDir, name));
      labels.push(classIndex);
    }
  }

  const tensors = files.map((file) => loadImageTensor(file, options.inputSize));
  const xs = tf.stack(tensors) as tf.Tensor4D;
  tensors.forEach((t) => t.dispose());
  const ys = tf.oneHot(tf.tensor1d(labels, 'int32'), plan.classList.length) as tf.Tensor2D;

  return {
    xs,
    ys,
    labels,
    files,
    classList: [...plan.classList],
    inputSize: options.inputSize,
  };
}

export function disposeDataset(dataset: Dataset): void {
  dataset.xs.dispose();
  dataset.ys.dispose();
}
