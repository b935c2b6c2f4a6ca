/** Model and document persistence.
 *
 * A model artifact is a directory holding model.json (topology +
 * weight specs), weights.bin, and meta.json (backbone settings). All
 * files are written atomically (temp file in the same directory, then
 * rename) so readers never observe a half-written artifact.
 */

import { mkdirSync, readFileSync, renameSync, writeFileSync, existsSync } from 'node:fs';
import { dirname, join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { BackboneMeta } from './backbone.js';
import { MissingWeights } from './errors.js';

/** Sidecar description of a saved model directory. */
export interface ModelMeta extends BackboneMeta {
  kind: 'backbone' | 'classifier';
  /** Present on classifier artifacts: output class per logit index. */
  classList?: string[];
}

export function atomicWriteFile(path: string, data: Buffer | string): void {
  mkdirSync(dirname(path), { recursive: true });
  const temp = `${path}.tmp-${process.pid}`;
  writeFileSync(temp, data);
  renameSync(temp, path);
}

export function writeJson(path: string, doc: unknown): void {
  atomicWriteFile(path, `${JSON.stringify(doc, null, 2)}\n`);
}

function concatWeightData(weightData: ArrayBuffer | ArrayBuffer[]): Buffer {
  if (Array.isArray(weightData)) {
    return Buffer.concat(weightData.map((part) => Buffer.from(part)));
  }
  return Buffer.from(weightData);
}

export async function saveModel(
  model: tf.LayersModel,
  dir: string,
  meta: ModelMeta,
): Promise<void> {
  mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const { weightData, ...rest } = artifacts;
      if (weightData === undefined) {
        throw new Error('model save produced no weight data');
      }
      writeJson(join(dir, 'model.json'), rest);
      atomicWriteFile(join(dir, 'weights.bin'), concatWeightData(weightData));
      return { modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' } };
    }),
  );
  writeJson(join(dir, 'meta.json'), meta);
}

export async function loadModel(dir: string): Promise<{ model: tf.LayersModel; meta: ModelMeta }> {
  const modelPath = join(dir, 'model.json');
  const weightsPath = join(dir, 'weights.bin');
  const metaPath = join(dir, 'meta.json');
  for (const path of [modelPath, weightsPath, metaPath]) {
    if (!existsSync(path)) {
      throw new MissingWeights(`${path}: pretrained model artifact is incomplete`);
    }
  }
  const artifacts = JSON.parse(readFileSync(modelPath, 'utf-8')) as tf.io.ModelArtifacts;
  const weights = readFileSync(weightsPath);
  const weightData = weights.buffer.slice(
    weights.byteOffset,
    weights.byteOffset + weights.byteLength,
  );
  const model = await tf.loadLayersModel(tf.io.fromMemory({ ...artifacts, weightData }));
  const meta = JSON.parse(readFileSync(metaPath, 'utf-8')) as ModelMeta;
  return { model, meta };
}
