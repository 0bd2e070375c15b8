/**
 * Image loading and resizing. PNG is the supported on-disk format; in
 * memory an image is planar-interleaved RGB with 8-bit channels.
 * Resizing uses bicubic interpolation (Keys kernel, a = -0.5), the same
 * family of filter the road images were prepared with.
 */

import * as fs from 'node:fs';
import { PNG } from 'pngjs';

export interface RgbImage {
  width: number;
  height: number;
  /** RGB interleaved, length = width * height * 3, values 0..255. */
  data: Uint8ClampedArray;
}

export function loadPng(path: string): RgbImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const data = new Uint8ClampedArray(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    data[i * 3] = png.data[i * 4];
    data[i * 3 + 1] = png.data[i * 4 + 1];
    data[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, data };
}

export function savePng(image: RgbImage, path: string): void {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    png.data[i * 4] = image.data[i * 3];
    png.data[i * 4 + 1] = image.data[i * 3 + 1];
    png.data[i * 4 + 2] = image.data[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png));
}

/** Keys cubic convolution kernel with a = -0.5 (Catmull-Rom). */
function cubicWeight(t: number): number {
  const a = -0.5;
  const x = Math.abs(t);
  if (x <= 1) {
    return (a + 2) * x * x * x - (a + 3) * x * x + 1;
  }
  if (x < 2) {
    return a * x * x * x - 5 * a * x * x + 8 * a * x - 4 * a;
  }
  return 0;
}

export function resizeBicubic(image: RgbImage, outWidth: number, outHeight: number): RgbImage {
  const { width, height, data } = image;
  const out = new Uint8ClampedArray(outWidth * outHeight * 3);
  const scaleX = width / outWidth;
  const scaleY = height / outHeight;

  const clampX = (x: number) => Math.min(Math.max(x, 0), width - 1);
  const clampY = (y: number) => Math.min(Math.max(y, 0), height - 1);

  for (let oy = 0; oy < outHeight; oy++) {
    const sy = (oy + 0.5) * scaleY - 0.5;
    const y0 = Math.floor(sy);
    for (let ox = 0; ox < outWidth; ox++) {
      const sx = (ox + 0.5) * scaleX - 0.5;
      const x0 = Math.floor(sx);
      for (let ch = 0; ch < 3; ch++) {
        let acc = 0;
        let weightSum = 0;
        for (let dy = -1; dy <= 2; dy++) {
          const wy = cubicWeight(sy - (y0 + dy));
          if (wy === 0) continue;
          const py = clampY(y0 + dy);
          for (let dx = -1; dx <= 2; dx++) {
            const wx = cubicWeight(sx - (x0 + dx));
            if (wx === 0) continue;
            const px = clampX(x0 + dx);
            acc += wy * wx * data[(py * width + px) * 3 + ch];
            weightSum += wy * wx;
          }
        }
        out[(oy * outWidth + ox) * 3 + ch] = Math.round(acc / weightSum);
      }
    }
  }
  return { width: outWidth, height: outHeight, data: out };
}

/** Image scaled to [0, 1] floats in HWC order, for network input. */
export function toFloatTensorData(image: RgbImage): Float32Array {
  const out = new Float32Array(image.data.length);
  for (let i = 0; i < image.data.length; i++) {
    out[i] = image.data[i] / 255;
  }
  return out;
}
