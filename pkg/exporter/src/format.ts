/**
 * Binary interchange formats consumed by the pipeline: feature-vector
 * files (magic VFV1) and probability-grid files (magic VGR1). Both are
 * little-endian with 32-bit floats; layouts must match the pipeline's
 * readers byte for byte.
 */

export const FEATURE_MAGIC = 'VFV1';
export const GRID_MAGIC = 'VGR1';

export const LAYER_TAGS = ['fc6', 'fc7', 'fc6fc7', 'other'] as const;
export type LayerTag = (typeof LAYER_TAGS)[number];

export interface FeatureRecord {
  imageId: string;
  layerTag: LayerTag;
  values: Float32Array;
}

export interface GridHeader {
  cellsPerSide: number;
  boxesPerCell: number;
  classCount: number;
  imageWidth: number;
  imageHeight: number;
}

export interface GridRecord {
  imageId: string;
  /** cellsPerSide^2 * boxesPerCell * 5 floats: cx, cy, w, h, objectness. */
  boxes: Float32Array;
  /** cellsPerSide^2 * classCount floats. */
  classProbs: Float32Array;
}

class ByteWriter {
  private chunks: Buffer[] = [];

  magic(text: string): void {
    this.chunks.push(Buffer.from(text, 'ascii'));
  }

  u32(value: number): void {
    const buf = Buffer.alloc(4);
    buf.writeUInt32LE(value >>> 0);
    this.chunks.push(buf);
  }

  u8(value: number): void {
    this.chunks.push(Buffer.from([value & 0xff]));
  }

  text(value: string): void {
    const data = Buffer.from(value, 'utf-8');
    this.u32(data.length);
    this.chunks.push(data);
  }

  f32Array(values: Float32Array): void {
    const buf = Buffer.alloc(values.length * 4);
    for (let i = 0; i < values.length; i++) {
      buf.writeFloatLE(values[i], i * 4);
    }
    this.chunks.push(buf);
  }

  finish(): Buffer {
    return Buffer.concat(this.chunks);
  }
}

class ByteReader {
  private pos = 0;

  constructor(private readonly buf: Buffer) {}

  private need(count: number): void {
    if (this.pos + count > this.buf.length) {
      throw new Error(
        `truncated file: needed ${count} bytes at offset ${this.pos}, ` +
          `only ${this.buf.length - this.pos} available`,
      );
    }
  }

  magic(expected: string): void {
    this.need(4);
    const found = this.buf.toString('ascii', this.pos, this.pos + 4);
    if (found !== expected) {
      throw new Error(`bad magic: expected ${expected}, found ${found}`);
    }
    this.pos += 4;
  }

  u32(): number {
    this.need(4);
    const value = this.buf.readUInt32LE(this.pos);
    this.pos += 4;
    return value;
  }

  u8(): number {
    this.need(1);
    return this.buf[this.pos++];
  }

  text(): string {
    const length = this.u32();
    this.need(length);
    const value = this.buf.toString('utf-8', this.pos, this.pos + length);
    this.pos += length;
    return value;
  }

  f32Array(count: number): Float32Array {
    this.need(count * 4);
    const out = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      out[i] = this.buf.readFloatLE(this.pos + i * 4);
    }
    this.pos += count * 4;
    return out;
  }

  atEof(): boolean {
    return this.pos === this.buf.length;
  }
}

export function encodeFeatureFile(records: FeatureRecord[]): Buffer {
  const dim = records.length > 0 ? records[0].values.length : 0;
  for (const rec of records) {
    if (rec.values.length !== dim) {
      throw new Error(`feature file requires uniform dim, got ${dim} and ${rec.values.length}`);
    }
    for (const v of rec.values) {
      if (!Number.isFinite(v)) {
        throw new Error(`non-finite feature value for image ${rec.imageId}`);
      }
    }
  }
  const w = new ByteWriter();
  w.magic(FEATURE_MAGIC);
  w.u32(dim);
  w.u32(records.length);
  for (const rec of records) {
    w.text(rec.imageId);
    w.u8(LAYER_TAGS.indexOf(rec.layerTag));
    w.f32Array(rec.values);
  }
  return w.finish();
}

export function decodeFeatureFile(buf: Buffer): FeatureRecord[] {
  const r = new ByteReader(buf);
  r.magic(FEATURE_MAGIC);
  const dim = r.u32();
  const count = r.u32();
  const records: FeatureRecord[] = [];
  for (let i = 0; i < count; i++) {
    const imageId = r.text();
    const tagByte = r.u8();
    if (tagByte >= LAYER_TAGS.length) {
      throw new Error(`unknown layer tag byte ${tagByte}`);
    }
    records.push({ imageId, layerTag: LAYER_TAGS[tagByte], values: r.f32Array(dim) });
  }
  if (!r.atEof()) {
    throw new Error('trailing data after declared records');
  }
  return records;
}

export function encodeGridFile(header: GridHeader, records: GridRecord[]): Buffer {
  const s = header.cellsPerSide;
  const nBox = s * s * header.boxesPerCell * 5;
  const nProb = s * s * header.classCount;
  const w = new ByteWriter();
  w.magic(GRID_MAGIC);
  w.u32(s);
  w.u32(header.boxesPerCell);
  w.u32(header.classCount);
  w.u32(header.imageWidth);
  w.u32(header.imageHeight);
  for (const rec of records) {
    if (rec.boxes.length !== nBox || rec.classProbs.length !== nProb) {
      throw new Error(`grid record for ${rec.imageId} does not match the header shape`);
    }
    w.text(rec.imageId);
    w.f32Array(rec.boxes);
    w.f32Array(rec.classProbs);
  }
  return w.finish();
}

export function decodeGridFile(buf: Buffer): { header: GridHeader; records: GridRecord[] } {
  const r = new ByteReader(buf);
  r.magic(GRID_MAGIC);
  const header: GridHeader = {
    cellsPerSide: r.u32(),
    boxesPerCell: r.u32(),
    classCount: r.u32(),
    imageWidth: r.u32(),
    imageHeight: r.u32(),
  };
  const s = header.cellsPerSide;
  const nBox = s * s * header.boxesPerCell * 5;
  const nProb = s * s * header.classCount;
  const records: GridRecord[] = [];
  while (!r.atEof()) {
    records.push({ imageId: r.text(), boxes: r.f32Array(nBox), classProbs: r.f32Array(nProb) });
  }
  return { header, records };
}
