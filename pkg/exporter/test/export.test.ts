import { spawnSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { decodeFeatureFile, decodeGridFile } from '../src/format.js';
import { exportFeatures, exportGrids } from '../src/export.js';
import { ClassifierArch, DetectorArch } from '../src/network.js';
import { makeImage, scenePixel, writePng } from './helpers.js';

const tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), 'exporter-export-'));
afterAll(() => fs.rmSync(tmpDir, { recursive: true, force: true }));

// Slim conv stacks keep tests fast; fc6/fc7 stay at their real 4096 width
// because the feature contract depends on it.
const classifier: ClassifierArch = {
  inputSize: 256,
  convFilters: [8, 12, 16, 16, 16],
  fcWidth: 4096,
  seed: 5,
};
const detector: DetectorArch = {
  inputWidth: 448,
  inputHeight: 333,
  cellsPerSide: 11,
  boxesPerCell: 2,
  classCount: 1,
  convFilters: [4, 8],
  hiddenWidth: 64,
  seed: 5,
};

let imageA: string;
let imageB: string;

beforeAll(() => {
  imageA = writePng(makeImage(96, 72, scenePixel(1)), path.join(tmpDir, 'road-a.png'));
  imageB = writePng(makeImage(96, 72, scenePixel(2)), path.join(tmpDir, 'road-b.png'));
});

describe('feature export', () => {
  it('emits exactly 4096-dim finite records for fc6 and fc7', async () => {
    for (const layer of ['fc6', 'fc7'] as const) {
      const out = path.join(tmpDir, `feat-${layer}.vfv`);
      await exportFeatures({
        imagePaths: [imageA, imageB],
        target: 'features',
        layer,
        outPath: out,
        classifier,
      });
      const records = decodeFeatureFile(fs.readFileSync(out));
      expect(records.map((r) => r.imageId)).toEqual(['road-a', 'road-b']);
      for (const rec of records) {
        expect(rec.layerTag).toBe(layer);
        expect(rec.values.length).toBe(4096);
        expect([...rec.values].every(Number.isFinite)).toBe(true);
      }
    }
  });

  it('is deterministic: exporting the same image twice gives identical bytes', async () => {
    const out1 = path.join(tmpDir, 'det-1.vfv');
    const out2 = path.join(tmpDir, 'det-2.vfv');
    const job = { imagePaths: [imageA], target: 'features' as const, layer: 'fc6' as const, classifier };
    await exportFeatures({ ...job, outPath: out1 });
    await exportFeatures({ ...job, outPath: out2 });
    expect(fs.readFileSync(out1).equals(fs.readFileSync(out2))).toBe(true);
  });

  it('different images give different features', async () => {
    const out = path.join(tmpDir, 'pair.vfv');
    await exportFeatures({
      imagePaths: [imageA, imageB], target: 'features', layer: 'fc6', outPath: out, classifier,
    });
    const [a, b] = decodeFeatureFile(fs.readFileSync(out));
    expect(Buffer.from(a.values.buffer).equals(Buffer.from(b.values.buffer))).toBe(false);
  });

  it('handles an empty batch', async () => {
    const out = path.join(tmpDir, 'empty.vfv');
    await exportFeatures({
      imagePaths: [], target: 'features', layer: 'fc6', outPath: out, classifier,
    });
    expect(decodeFeatureFile(fs.readFileSync(out))).toEqual([]);
  });

  it('rejects a feature job without a layer and a grid job with one', async () => {
    await expect(
      exportFeatures({ imagePaths: [], target: 'features', outPath: '/dev/null' }),
    ).rejects.toThrow(/layer selection/);
    await expect(
      exportGrids({
        imagePaths: [], target: 'grids', layer: 'fc6', outPath: '/dev/null', detector,
      }),
    ).rejects.toThrow(/only valid for the features target/);
  });
});

describe('grid export', () => {
  it('declares the 11x11 single-class header and in-range values', async () => {
    const out = path.join(tmpDir, 'grids.vgr');
    await exportGrids({ imagePaths: [imageA, imageB], target: 'grids', outPath: out, detector });
    const { header, records } = decodeGridFile(fs.readFileSync(out));
    expect(header.cellsPerSide).toBe(11);
    expect(header.classCount).toBe(1);
    expect(header.imageWidth).toBe(448);
    expect(header.imageHeight).toBe(333);
    expect(records.length).toBe(2);
    for (const rec of records) {
      for (const v of rec.boxes) {
        expect(v).toBeGreaterThanOrEqual(0);
        expect(v).toBeLessThanOrEqual(1);
      }
      for (const v of rec.classProbs) {
        expect(v).toBeGreaterThanOrEqual(0);
        expect(v).toBeLessThanOrEqual(1);
      }
    }
  });

  it('is deterministic across runs', async () => {
    const out1 = path.join(tmpDir, 'g1.vgr');
    const out2 = path.join(tmpDir, 'g2.vgr');
    await exportGrids({ imagePaths: [imageA], target: 'grids', outPath: out1, detector });
    await exportGrids({ imagePaths: [imageA], target: 'grids', outPath: out2, detector });
    expect(fs.readFileSync(out1).equals(fs.readFileSync(out2))).toBe(true);
  });
});

describe('primary pipeline accepts exported files', () => {
  it('detect consumes an exported grid file', async () => {
    const grids = path.join(tmpDir, 'accept.vgr');
    await exportGrids({ imagePaths: [imageA, imageB], target: 'grids', outPath: grids, detector });
    const out = path.join(tmpDir, 'dets.jsonl');
    const probe = spawnSync('python3', [
      '-m', 'vehiclepipe', 'detect', '--grids', grids, '--out', out,
      '--score-threshold', '0.5',
    ]);
    expect([probe.status, probe.stderr.toString()]).toEqual([0, '']);
    expect(fs.readFileSync(out, 'utf-8').trim().split('\n').length).toBe(2);
  });

  it('train and predict consume exported feature files', async () => {
    const feats = path.join(tmpDir, 'accept_fc6.vfv');
    await exportFeatures({
      imagePaths: [imageA, imageB], target: 'features', layer: 'fc6',
      outPath: feats, classifier,
    });
    const manifest = path.join(tmpDir, 'manifest.jsonl');
    fs.writeFileSync(
      manifest,
      [
        JSON.stringify({
          image_id: 'road-a', split: 'train', variant: 'normal',
          label: 'passenger', features: { fc6: 'accept_fc6.vfv' },
        }),
        JSON.stringify({
          image_id: 'road-b', split: 'train', variant: 'normal',
          label: 'other', features: { fc6: 'accept_fc6.vfv' },
        }),
        '',
      ].join('\n'),
    );
    const model = path.join(tmpDir, 'model.vlm');
    const trained = spawnSync('python3', [
      '-m', 'vehiclepipe', 'train', '--manifest', manifest, '--out', model, '--layer', 'fc6',
    ]);
    expect([trained.status, trained.stderr.toString()]).toEqual([0, '']);

    const conf = path.join(tmpDir, 'conf.jsonl');
    const predicted = spawnSync('python3', [
      '-m', 'vehiclepipe', 'predict', '--model', model, '--features', feats, '--out', conf,
    ]);
    expect([predicted.status, predicted.stderr.toString()]).toEqual([0, '']);
    const rows = fs.readFileSync(conf, 'utf-8').trim().split('\n').map((l) => JSON.parse(l));
    expect(rows.length).toBe(2);
    for (const row of rows) {
      expect(row.conf_passenger + row.conf_other).toBeCloseTo(1.0, 9);
    }
  });
});

describe('exporter CLI', () => {
  it('mirrors the pipeline flag conventions and stays deterministic', () => {
    const out1 = path.join(tmpDir, 'cli1.vfv');
    const out2 = path.join(tmpDir, 'cli2.vfv');
    const args = [
      path.join(__dirname, '..', 'dist', 'cli.js'),
      'features', '--images', imageA, '--layer', 'fc6',
      '--conv', '8,12,16,16,16', '--seed', '5',
    ];
    const run1 = spawnSync('node', [...args, '--out', out1]);
    expect(run1.status).toBe(0);
    const run2 = spawnSync('node', [...args, '--out', out2]);
    expect(run2.status).toBe(0);
    expect(fs.readFileSync(out1).equals(fs.readFileSync(out2))).toBe(true);
    expect(decodeFeatureFile(fs.readFileSync(out1))[0].values.length).toBe(4096);
  });

  it('exits 2 for an unreadable image', () => {
    const probe = spawnSync('node', [
      path.join(__dirname, '..', 'dist', 'cli.js'),
      'grids', '--images', path.join(tmpDir, 'missing.png'),
      '--out', path.join(tmpDir, 'x.vgr'), '--conv', '4,8',
    ]);
    expect(probe.status).toBe(2);
  });
});
