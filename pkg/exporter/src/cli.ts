#!/usr/bin/env node
/**
 * Exporter CLI. Flag conventions mirror the pipeline CLI: subcommands
 * with long flags, exit 0 on success, 2 on unreadable inputs, 3 on
 * invalid option combinations.
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { enhanceImages, exportFeatures, exportGrids } from './export.js';
import { DEFAULT_CLASSIFIER, DEFAULT_DETECTOR } from './network.js';

function parseConv(text: string | undefined, fallback: number[]): number[] {
  if (text === undefined) return fallback;
  const values = text.split(',').map((v) => Number.parseInt(v.trim(), 10));
  if (values.some((v) => !Number.isInteger(v) || v <= 0)) {
    throw new Error(`bad filter list: ${text}`);
  }
  return values;
}

export async function main(argv: string[]): Promise<number> {
  try {
    await yargs(argv)
      .scriptName('vehiclepipe-exporter')
      .strict()
      .demandCommand(1)
      .command(
        'features',
        'extract fc6/fc7 feature vectors into a .vfv file',
        (y) =>
          y
            .option('images', { type: 'string', array: true, demandOption: true })
            .option('layer', { choices: ['fc6', 'fc7'] as const, demandOption: true })
            .option('out', { type: 'string', demandOption: true })
            .option('seed', { type: 'number', default: DEFAULT_CLASSIFIER.seed })
            .option('input-size', { type: 'number', default: DEFAULT_CLASSIFIER.inputSize })
            .option('fc-width', { type: 'number', default: DEFAULT_CLASSIFIER.fcWidth })
            .option('conv', { type: 'string', describe: 'comma-separated conv filter counts' }),
        async (args) => {
          const conv = parseConv(args.conv, [...DEFAULT_CLASSIFIER.convFilters]);
          if (conv.length !== 5) {
            throw new Error('classifier needs exactly 5 conv filter counts');
          }
          await exportFeatures({
            imagePaths: args.images,
            target: 'features',
            layer: args.layer,
            outPath: args.out,
            classifier: {
              inputSize: args.inputSize,
              convFilters: conv as [number, number, number, number, number],
              fcWidth: args.fcWidth,
              seed: args.seed,
            },
          });
        },
      )
      .command(
        'grids',
        'run the detection head and emit a .vgr probability-grid file',
        (y) =>
          y
            .option('images', { type: 'string', array: true, demandOption: true })
            .option('out', { type: 'string', demandOption: true })
            .option('seed', { type: 'number', default: DEFAULT_DETECTOR.seed })
            .option('width', { type: 'number', default: DEFAULT_DETECTOR.inputWidth })
            .option('height', { type: 'number', default: DEFAULT_DETECTOR.inputHeight })
            .option('cells', { type: 'number', default: DEFAULT_DETECTOR.cellsPerSide })
            .option('boxes', { type: 'number', default: DEFAULT_DETECTOR.boxesPerCell })
            .option('classes', { type: 'number', default: DEFAULT_DETECTOR.classCount })
            .option('hidden', { type: 'number', default: DEFAULT_DETECTOR.hiddenWidth })
            .option('conv', { type: 'string', describe: 'comma-separated conv filter counts' }),
        async (args) => {
          const conv = parseConv(args.conv, [...DEFAULT_DETECTOR.convFilters]);
          if (conv.length !== 2) {
            throw new Error('detector needs exactly 2 conv filter counts');
          }
          await exportGrids({
            imagePaths: args.images,
            target: 'grids',
            outPath: args.out,
            detector: {
              inputWidth: args.width,
              inputHeight: args.height,
              cellsPerSide: args.cells,
              boxesPerCell: args.boxes,
              classCount: args.classes,
              convFilters: conv as [number, number],
              hiddenWidth: args.hidden,
              seed: args.seed,
            },
          });
        },
      )
      .command(
        'enhance',
        'contrast-stretch and white-balance dark images into an output directory',
        (y) =>
          y
            .option('images', { type: 'string', array: true, demandOption: true })
            .option('out-dir', { type: 'string', demandOption: true }),
        (args) => {
          enhanceImages(args.images, args.outDir);
        },
      )
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseAsync();
    return 0;
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    process.stderr.write(`vehiclepipe-exporter: error: ${message}\n`);
    if (/ENOENT|bad magic|truncated/.test(message)) {
      return 2;
    }
    return 3;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
