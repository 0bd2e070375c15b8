import * as fs from 'node:fs';
import * as path from 'node:path';
import { PNG } from 'pngjs';

import { RgbImage } from '../src/image.js';

export function makeImage(
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number],
): RgbImage {
  const data = new Uint8ClampedArray(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixel(x, y);
      const i = (y * width + x) * 3;
      data[i] = r;
      data[i + 1] = g;
      data[i + 2] = b;
    }
  }
  return { width, height, data };
}

export function writePng(image: RgbImage, filePath: string): string {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    png.data[i * 4] = image.data[i * 3];
    png.data[i * 4 + 1] = image.data[i * 3 + 1];
    png.data[i * 4 + 2] = image.data[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  fs.mkdirSync(path.dirname(filePath), { recursive: true });
  fs.writeFileSync(filePath, PNG.sync.write(png));
  return filePath;
}

/** Busy scene: blocky gradient patches so features vary with content. */
export function scenePixel(seed: number) {
  return (x: number, y: number): [number, number, number] => [
    (x * 3 + seed * 61) % 256,
    (y * 5 + seed * 97) % 256,
    ((x + y) * 2 + seed * 31) % 256,
  ];
}

/** Low-contrast night-ish scene squeezed into a narrow dark band. */
export function darkPixel(seed: number) {
  return (x: number, y: number): [number, number, number] => [
    20 + ((x + seed) % 30),
    15 + ((y + seed) % 25),
    30 + ((x + y + seed) % 20),
  ];
}

export function channelRanges(image: RgbImage): [number, number][] {
  const ranges: [number, number][] = [];
  for (let ch = 0; ch < 3; ch++) {
    let lo = 255;
    let hi = 0;
    for (let i = 0; i < image.width * image.height; i++) {
      const v = image.data[i * 3 + ch];
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    ranges.push([lo, hi]);
  }
  return ranges;
}
