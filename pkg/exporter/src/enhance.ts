/**
 * Dark-image enhancement: per-channel contrast stretch plus gray-world
 * white balance. A documented stand-in for the learned scene
 * transformation used to produce "transformed" night images; it is not
 * equivalent to that model, it only restores contrast and neutralizes
 * the color cast so the normal-image classifier gets a fairer input.
 */

import { RgbImage } from './image.js';

/** Percentile-clipped per-channel histogram stretch to the full range. */
export function contrastStretch(image: RgbImage, clipPercent = 1.0): RgbImage {
  const n = image.width * image.height;
  const out = new Uint8ClampedArray(image.data.length);
  for (let ch = 0; ch < 3; ch++) {
    const hist = new Array<number>(256).fill(0);
    for (let i = 0; i < n; i++) {
      hist[image.data[i * 3 + ch]]++;
    }
    const clip = (n * clipPercent) / 100;
    let lo = 0;
    let acc = 0;
    while (lo < 255 && acc + hist[lo] <= clip) {
      acc += hist[lo];
      lo++;
    }
    let hi = 255;
    acc = 0;
    while (hi > lo && acc + hist[hi] <= clip) {
      acc += hist[hi];
      hi--;
    }
    const span = hi > lo ? hi - lo : 1;
    for (let i = 0; i < n; i++) {
      out[i * 3 + ch] = Math.round(((image.data[i * 3 + ch] - lo) * 255) / span);
    }
  }
  return { width: image.width, height: image.height, data: out };
}

/** Scale each channel so its mean matches the overall gray mean. */
export function grayWorldBalance(image: RgbImage): RgbImage {
  const n = image.width * image.height;
  const means = [0, 0, 0];
  for (let i = 0; i < n; i++) {
    means[0] += image.data[i * 3];
    means[1] += image.data[i * 3 + 1];
    means[2] += image.data[i * 3 + 2];
  }
  for (let ch = 0; ch < 3; ch++) {
    means[ch] /= n;
  }
  const gray = (means[0] + means[1] + means[2]) / 3;
  const out = new Uint8ClampedArray(image.data.length);
  for (let i = 0; i < n; i++) {
    for (let ch = 0; ch < 3; ch++) {
      const gain = means[ch] > 0 ? gray / means[ch] : 1;
      out[i * 3 + ch] = Math.round(image.data[i * 3 + ch] * gain);
    }
  }
  return { width: image.width, height: image.height, data: out };
}

export function enhanceDark(image: RgbImage): RgbImage {
  return contrastStretch(grayWorldBalance(image));
}
