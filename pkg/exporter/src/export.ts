/**
 * Export jobs: run a network over a batch of images and emit the
 * pipeline's interchange files. Image ids are file basenames without
 * extension, matching how manifests refer to images. Output order
 * follows the input list; identical inputs give identical bytes.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import {
  FeatureRecord,
  GridRecord,
  LayerTag,
  encodeFeatureFile,
  encodeGridFile,
} from './format.js';
import { enhanceDark } from './enhance.js';
import { loadPng, resizeBicubic, savePng, toFloatTensorData } from './image.js';
import {
  ClassifierArch,
  DEFAULT_CLASSIFIER,
  DEFAULT_DETECTOR,
  DetectorArch,
  DetectionNetwork,
  FeatureNetwork,
  ensureBackend,
} from './network.js';

export type ExportTarget = 'grids' | 'features';

export interface ExportJob {
  imagePaths: string[];
  target: ExportTarget;
  layer?: 'fc6' | 'fc7';
  outPath: string;
  classifier?: ClassifierArch;
  detector?: DetectorArch;
}

export function imageId(imagePath: string): string {
  return path.basename(imagePath, path.extname(imagePath));
}

function validate(job: ExportJob): void {
  if (job.target === 'features' && job.layer === undefined) {
    throw new Error('feature export requires a layer selection (fc6 or fc7)');
  }
  if (job.target === 'grids' && job.layer !== undefined) {
    throw new Error('layer selection is only valid for the features target');
  }
}

export async function exportFeatures(job: ExportJob): Promise<Buffer> {
  validate(job);
  await ensureBackend();
  const arch = job.classifier ?? DEFAULT_CLASSIFIER;
  const layer = job.layer as LayerTag & ('fc6' | 'fc7');
  const network = new FeatureNetwork(arch);
  try {
    const records: FeatureRecord[] = [];
    for (const imagePath of job.imagePaths) {
      const image = loadPng(imagePath);
      const resized = resizeBicubic(image, arch.inputSize, arch.inputSize);
      const out = network.activations(toFloatTensorData(resized));
      records.push({
        imageId: imageId(imagePath),
        layerTag: layer,
        values: layer === 'fc6' ? out.fc6 : out.fc7,
      });
    }
    const encoded = encodeFeatureFile(records);
    fs.writeFileSync(job.outPath, encoded);
    return encoded;
  } finally {
    network.dispose();
  }
}

export async function exportGrids(job: ExportJob): Promise<Buffer> {
  validate(job);
  await ensureBackend();
  const arch = job.detector ?? DEFAULT_DETECTOR;
  const network = new DetectionNetwork(arch);
  try {
    const records: GridRecord[] = [];
    for (const imagePath of job.imagePaths) {
      const image = loadPng(imagePath);
      const resized = resizeBicubic(image, arch.inputWidth, arch.inputHeight);
      const { boxes, classProbs } = network.grid(toFloatTensorData(resized));
      records.push({ imageId: imageId(imagePath), boxes, classProbs });
    }
    const encoded = encodeGridFile(
      {
        cellsPerSide: arch.cellsPerSide,
        boxesPerCell: arch.boxesPerCell,
        classCount: arch.classCount,
        imageWidth: arch.inputWidth,
        imageHeight: arch.inputHeight,
      },
      records,
    );
    fs.writeFileSync(job.outPath, encoded);
    return encoded;
  } finally {
    network.dispose();
  }
}

export function enhanceImages(imagePaths: string[], outDir: string): string[] {
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const imagePath of imagePaths) {
    const enhanced = enhanceDark(loadPng(imagePath));
    const outPath = path.join(outDir, path.basename(imagePath));
    savePng(enhanced, outPath);
    written.push(outPath);
  }
  return written;
}
