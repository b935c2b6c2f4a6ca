#!/usr/bin/env node
/** Command-line entry points for the fine-tuning trainer. */

import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import {
  DEFAULT_INPUT_SIZE,
  DEFAULT_PRESET,
  PRESETS,
  assembleModel,
  backboneMeta,
  buildBackbone,
  buildHead,
} from './backbone.js';
import { prepareDataset, readPlan } from './dataset.js';
import { evaluateModel, renderMetrics, writeMetricsDoc } from './evaluate.js';
import { loadModel, saveModel } from './io.js';
import { findLearningRate, writeLrCurveCsv } from './lrfinder.js';
import { TRAIN_DEFAULTS, fineTune, writeHistoryCsv } from './train.js';

export async function main(argv: string[]): Promise<void> {
  await yargs(argv)
    .scriptName('dl-trainer')
    .command(
      'init-backbone',
      'create a seeded backbone artifact to fine-tune from',
      (args) =>
        args
          .option('out', { type: 'string', demandOption: true, describe: 'artifact directory' })
          .option('preset', {
            type: 'string',
            default: DEFAULT_PRESET,
            choices: Object.keys(PRESETS),
          })
          .option('input-size', { type: 'number', default: DEFAULT_INPUT_SIZE })
          .option('seed', { type: 'number', default: 0 }),
      async (opts) => {
        const config = {
          preset: opts.preset,
          inputSize: opts['input-size'],
          seed: opts.seed,
        };
        const backbone = buildBackbone(config);
        await saveModel(backbone, opts.out, { ...backboneMeta(config), kind: 'backbone' });
        console.log(`wrote backbone artifact to ${opts.out}`);
      },
    )
    .command(
      'find-lr',
      'probe learning rates against a run directory and suggest one',
      (args) =>
        args
          .option('run', { type: 'string', demandOption: true, describe: 'materialized run dir' })
          .option('pretrained', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true, describe: 'curve CSV path' })
          .option('probes', { type: 'number', default: 30 })
          .option('min-exponent', { type: 'number', default: -5 })
          .option('max-exponent', { type: 'number', default: 0 })
          .option('batch-size', { type: 'number', default: TRAIN_DEFAULTS.batchSize })
          .option('max-per-class', { type: 'number' })
          .option('seed', { type: 'number', default: TRAIN_DEFAULTS.seed }),
      async (opts) => {
        const { model: backbone, meta } = await loadModel(opts.pretrained);
        const plan = readPlan(opts.run);
        const dataset = prepareDataset(opts.run, 'train', plan, {
          inputSize: meta.inputSize,
          maxPerClass: opts['max-per-class'],
        });
        const head = buildHead(meta.featureDim, plan.classList.length, opts.seed);
        const model = assembleModel(backbone, head);
        const result = findLearningRate(model, dataset, {
          probes: opts.probes,
          minExponent: opts['min-exponent'],
          maxExponent: opts['max-exponent'],
          batchSize: opts['batch-size'],
          seed: opts.seed,
        });
        writeLrCurveCsv(opts.out, result.curve);
        console.log(`suggested rate: ${result.suggestion}`);
      },
    )
    .command(
      'train',
      'fine-tune a pretrained backbone on a run directory',
      (args) =>
        args
          .option('run', { type: 'string', demandOption: true })
          .option('pretrained', { type: 'string', demandOption: true })
          .option('out', { type: 'string', demandOption: true, describe: 'output directory' })
          .option('epochs', { type: 'number', default: TRAIN_DEFAULTS.epochs })
          .option('freeze-epochs', { type: 'number', default: TRAIN_DEFAULTS.freezePhaseEpochs })
          .option('batch-size', { type: 'number', default: TRAIN_DEFAULTS.batchSize })
          .option('base-rate', { type: 'number', default: TRAIN_DEFAULTS.baseRate })
          .option('cycles', { type: 'number', default: TRAIN_DEFAULTS.cycles })
          .option('momentum', { type: 'number', default: TRAIN_DEFAULTS.momentum })
          .option('max-per-class', { type: 'number' })
          .option('seed', { type: 'number', default: TRAIN_DEFAULTS.seed }),
      async (opts) => {
        const { meta } = await loadModel(opts.pretrained);
        const plan = readPlan(opts.run);
        const prepare = { inputSize: meta.inputSize, maxPerClass: opts['max-per-class'] };
        const train = prepareDataset(opts.run, 'train', plan, prepare);
        const val = prepareDataset(opts.run, 'test', plan, prepare);
        const result = await fineTune(opts.pretrained, train, val, {
          epochs: opts.epochs,
          freezePhaseEpochs: opts['freeze-epochs'],
          batchSize: opts['batch-size'],
          baseRate: opts['base-rate'],
          cycles: opts.cycles,
          momentum: opts.momentum,
          seed: opts.seed,
        });
        writeHistoryCsv(join(opts.out, 'history.csv'), result.history);
        await saveModel(result.model, join(opts.out, 'model'), {
          ...result.meta,
          kind: 'classifier',
          classList: plan.classList,
        });
        console.log(
          `best epoch ${result.bestEpoch}: validation accuracy ` +
            `${(result.bestValAccuracy * 100).toFixed(2)}%`,
        );
      },
    )
    .command(
      'evaluate',
      'score a trained classifier on the held-out side of a run',
      (args) =>
        args
          .option('run', { type: 'string', demandOption: true })
          .option('model', { type: 'string', demandOption: true, describe: 'classifier artifact' })
          .option('out', { type: 'string', demandOption: true, describe: 'metrics directory' })
          .option('max-per-class', { type: 'number' }),
      async (opts) => {
        const { model, meta } = await loadModel(opts.model);
        const plan = readPlan(opts.run);
        const dataset = prepareDataset(opts.run, 'test', plan, {
          inputSize: meta.inputSize,
          maxPerClass: opts['max-per-class'],
        });
        const doc = evaluateModel(model, dataset, plan, {
          preset: meta.preset,
          inputSize: meta.inputSize,
        });
        const path = writeMetricsDoc(opts.out, doc);
        process.stdout.write(renderMetrics(doc));
        console.log(`wrote ${path}`);
      },
    )
    .demandCommand(1, 'pick a command')
    .strict()
    .help()
    .parseAsync();
}

const invokedDirectly = process.argv[1]?.endsWith('cli.js') ?? false;
if (invokedDirectly) {
  tf.setBackend('cpu');
  main(hideBin(process.argv)).catch((error: unknown) => {
    console.error(error instanceof Error ? `${error.name}: ${error.message}` : String(error));
    process.exitCode = 1;
  });
}
