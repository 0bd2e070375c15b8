/**
 * The networks driven by the exporter, built with tfjs layers.
 *
 * Without downloadable pretrained checkpoints this module initializes
 * weights from a seeded PRNG, which keeps every export bit-reproducible;
 * swap in real weights by loading a layers model and passing it to the
 * same wrappers. The classification net follows the familiar
 * five-conv/two-fc shape whose fc6/fc7 layers are 4096 wide; the
 * detection net ends in a sigmoid head shaped for an 11x11 single-class
 * probability grid.
 */

import * as tf from '@tensorflow/tfjs';

export interface ClassifierArch {
  inputSize: number;
  convFilters: [number, number, number, number, number];
  fcWidth: number;
  seed: number;
}

export interface DetectorArch {
  inputWidth: number;
  inputHeight: number;
  cellsPerSide: number;
  boxesPerCell: number;
  classCount: number;
  convFilters: [number, number];
  hiddenWidth: number;
  seed: number;
}

export const DEFAULT_CLASSIFIER: ClassifierArch = {
  inputSize: 256,
  convFilters: [96, 256, 384, 384, 256],
  fcWidth: 4096,
  seed: 0,
};

export const DEFAULT_DETECTOR: DetectorArch = {
  inputWidth: 448,
  inputHeight: 333,
  cellsPerSide: 11,
  boxesPerCell: 2,
  classCount: 1,
  convFilters: [16, 32],
  hiddenWidth: 256,
  seed: 0,
};

let backendReady: Promise<void> | null = null;

export function ensureBackend(): Promise<void> {
  if (backendReady === null) {
    backendReady = tf.setBackend('cpu').then(() => tf.ready());
  }
  return backendReady;
}

function init(seed: number): ReturnType<typeof tf.initializers.glorotUniform> {
  return tf.initializers.glorotUniform({ seed });
}

export class FeatureNetwork {
  private readonly model: tf.LayersModel;

  constructor(readonly arch: ClassifierArch) {
    const [c1, c2, c3, c4, c5] = arch.convFilters;
    const seed = arch.seed;
    const input = tf.input({ shape: [arch.inputSize, arch.inputSize, 3] });
    let x = tf.layers
      .conv2d({
        filters: c1, kernelSize: 11, strides: 4, activation: 'relu',
        kernelInitializer: init(seed + 1), biasInitializer: 'zeros',
      })
      .apply(input) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 3, strides: 2 }).apply(x) as tf.SymbolicTensor;
    x = tf.layers
      .conv2d({
        filters: c2, kernelSize: 5, padding: 'same', activation: 'relu',
        kernelInitializer: init(seed + 2), biasInitializer: 'zeros',
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 3, strides: 2 }).apply(x) as tf.SymbolicTensor;
    const convSeeds: [number, number][] = [[c3, 3], [c4, 4], [c5, 5]];
    for (const [filters, s] of convSeeds) {
      x = tf.layers
        .conv2d({
          filters, kernelSize: 3, padding: 'same', activation: 'relu',
          kernelInitializer: init(seed + s), biasInitializer: 'zeros',
        })
        .apply(x) as tf.SymbolicTensor;
    }
    x = tf.layers.maxPooling2d({ poolSize: 3, strides: 2 }).apply(x) as tf.SymbolicTensor;
    x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
    const fc6 = tf.layers
      .dense({
        units: arch.fcWidth, activation: 'relu', name: 'fc6',
        kernelInitializer: init(seed + 6), biasInitializer: 'zeros',
      })
      .apply(x) as tf.SymbolicTensor;
    const fc7 = tf.layers
      .dense({
        units: arch.fcWidth, activation: 'relu', name: 'fc7',
        kernelInitializer: init(seed + 7), biasInitializer: 'zeros',
      })
      .apply(fc6) as tf.SymbolicTensor;
    this.model = tf.model({ inputs: input, outputs: [fc6, fc7] });
  }

  /** fc6 and fc7 activations for one [0,1]-scaled HWC image. */
  activations(imageData: Float32Array): { fc6: Float32Array; fc7: Float32Array } {
    const size = this.arch.inputSize;
    const [fc6, fc7] = tf.tidy(() => {
      const input = tf.tensor4d(imageData, [1, size, size, 3]);
      return this.model.predict(input) as tf.Tensor[];
    });
    const out = {
      fc6: new Float32Array(fc6.dataSync()),
      fc7: new Float32Array(fc7.dataSync()),
    };
    fc6.dispose();
    fc7.dispose();
    return out;
  }

  dispose(): void {
    this.model.dispose();
  }
}

export class DetectionNetwork {
  private readonly model: tf.LayersModel;
  readonly boxFloats: number;
  readonly probFloats: number;

  constructor(readonly arch: DetectorArch) {
    const s = arch.cellsPerSide;
    this.boxFloats = s * s * arch.boxesPerCell * 5;
    this.probFloats = s * s * arch.classCount;
    const seed = arch.seed;
    const input = tf.input({ shape: [arch.inputHeight, arch.inputWidth, 3] });
    let x = tf.layers
      .conv2d({
        filters: arch.convFilters[0], kernelSize: 7, strides: 4, activation: 'relu',
        kernelInitializer: init(seed + 11), biasInitializer: 'zeros',
      })
      .apply(input) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 2, strides: 2 }).apply(x) as tf.SymbolicTensor;
    x = tf.layers
      .conv2d({
        filters: arch.convFilters[1], kernelSize: 3, padding: 'same', activation: 'relu',
        kernelInitializer: init(seed + 12), biasInitializer: 'zeros',
      })
      .apply(x) as tf.SymbolicTensor;
    x = tf.layers.maxPooling2d({ poolSize: 2, strides: 2 }).apply(x) as tf.SymbolicTensor;
    x = tf.layers.flatten().apply(x) as tf.SymbolicTensor;
    x = tf.layers
      .dense({
        units: arch.hiddenWidth, activation: 'relu',
        kernelInitializer: init(seed + 13), biasInitializer: 'zeros',
      })
      .apply(x) as tf.SymbolicTensor;
    // One sigmoid head covering box tuples then class probabilities keeps
    // every emitted float inside [0, 1], as the grid format requires.
    const head = tf.layers
      .dense({
        units: this.boxFloats + this.probFloats, activation: 'sigmoid',
        kernelInitializer: init(seed + 14), biasInitializer: 'zeros',
      })
      .apply(x) as tf.SymbolicTensor;
    this.model = tf.model({ inputs: input, outputs: head });
  }

  /** Raw grid floats (boxes, then class probabilities) for one image. */
  grid(imageData: Float32Array): { boxes: Float32Array; classProbs: Float32Array } {
    const { inputWidth, inputHeight } = this.arch;
    const head = tf.tidy(() => {
      const input = tf.tensor4d(imageData, [1, inputHeight, inputWidth, 3]);
      return this.model.predict(input) as tf.Tensor;
    });
    const flat = new Float32Array(head.dataSync());
    head.dispose();
    return {
      boxes: flat.slice(0, this.boxFloats),
      classProbs: flat.slice(this.boxFloats),
    };
  }

  dispose(): void {
    this.model.dispose();
  }
}
