/**
 * GDMP gradient-dump binary format.
 *
 * Layout (all integers little-endian u32, all floats little-endian f32):
 *
 *   "GDMP" | version | nTrain | nTest | nLayers | dims[nLayers]
 *   | train rows (nTrain x totalDim floats) | test rows (nTest x totalDim)
 *   | per train id: byteLength + UTF-8 bytes
 *
 * The reader validates everything and rejects trailing bytes, so a file
 * that decodes is exactly a file this writer could have produced.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "GDMP";
export const VERSION = 1;
export const EXACT_DIM_GUARD = 512;

const HEADER_WORDS = 4; // version, nTrain, nTest, nLayers

export interface GradientDump {
  layerDims: number[];
  /** one id per train row, unique */
  trainIds: string[];
  /** flattened per-example gradients, layers concatenated in layerDims order */
  trainRows: Float32Array[];
  testRows: Float32Array[];
}

export class DumpError extends Error {}
export class BadMagicError extends DumpError {}
export class TruncatedDumpError extends DumpError {}
export class NonFiniteDumpError extends DumpError {}

export function totalDim(dump: Pick<GradientDump, "layerDims">): number {
  return dump.layerDims.reduce((a, b) => a + b, 0);
}

function checkRows(rows: Float32Array[], width: number, what: string): void {
  for (let i = 0; i < rows.length; i++) {
    const row = rows[i]!;
    if (row.length !== width) {
      throw new DumpError(
        `${what} row ${i} has ${row.length} values, expected ${width}`,
      );
    }
    for (const value of row) {
      if (!Number.isFinite(value)) {
        throw new NonFiniteDumpError(`${what} row ${i} contains a non-finite value`);
      }
    }
  }
}

export function validateDump(dump: GradientDump): void {
  if (dump.layerDims.length === 0) {
    throw new DumpError("dump needs at least one layer");
  }
  for (const dim of dump.layerDims) {
    if (!Number.isInteger(dim) || dim <= 0) {
      throw new DumpError(`layer dims must be positive integers, got ${dim}`);
    }
  }
  if (dump.trainRows.length === 0) {
    throw new DumpError("dump needs at least one train row");
  }
  if (dump.testRows.length === 0) {
    throw new DumpError("dump needs at least one test row");
  }
  if (dump.trainIds.length !== dump.trainRows.length) {
    throw new DumpError(
      `${dump.trainIds.length} train ids for ${dump.trainRows.length} train rows`,
    );
  }
  if (new Set(dump.trainIds).size !== dump.trainIds.length) {
    throw new DumpError("train ids must be unique");
  }
  const width = totalDim(dump);
  checkRows(dump.trainRows, width, "train");
  checkRows(dump.testRows, width, "test");
}

export function encodeDump(dump: GradientDump): Uint8Array {
  validateDump(dump);
  const width = totalDim(dump);
  const encoder = new TextEncoder();
  const ids = dump.trainIds.map((id) => encoder.encode(id));
  const size =
    4 +
    4 * HEADER_WORDS +
    4 * dump.layerDims.length +
    4 * width * (dump.trainRows.length + dump.testRows.length) +
    ids.reduce((a, raw) => a + 4 + raw.length, 0);

  const bytes = new Uint8Array(size);
  const view = new DataView(bytes.buffer);
  let offset = 0;
  for (const ch of MAGIC) {
    bytes[offset++] = ch.charCodeAt(0);
  }
  const u32 = (value: number) => {
    view.setUint32(offset, value, true);
    offset += 4;
  };
  u32(VERSION);
  u32(dump.trainRows.length);
  u32(dump.testRows.length);
  u32(dump.layerDims.length);
  for (const dim of dump.layerDims) {
    u32(dim);
  }
  for (const row of [...dump.trainRows, ...dump.testRows]) {
    for (const value of row) {
      view.setFloat32(offset, value, true);
      offset += 4;
    }
  }
  for (const raw of ids) {
    u32(raw.length);
    bytes.set(raw, offset);
    offset += raw.length;
  }
  return bytes;
}

class Cursor {
  private pos = 0;

  constructor(
    private readonly bytes: Uint8Array,
    private readonly view: DataView,
  ) {}

  take(n: number, what: string): Uint8Array {
    if (this.pos + n > this.bytes.length) {
      throw new TruncatedDumpError(
        `dump truncated reading ${what}: needed ${n} bytes at offset ${this.pos}, ` +
          `file has ${this.bytes.length}`,
      );
    }
    const chunk = this.bytes.subarray(this.pos, this.pos + n);
    this.pos += n;
    return chunk;
  }

  u32(what: string): number {
    this.take(4, what);
    return this.view.getUint32(this.pos - 4, true);
  }

  floats(count: number, what: string): Float32Array {
    const chunk = this.take(4 * count, what);
    const out = new Float32Array(count);
    const view = new DataView(chunk.buffer, chunk.byteOffset, chunk.byteLength);
    for (let i = 0; i < count; i++) {
      out[i] = view.getFloat32(4 * i, true);
    }
    return out;
  }

  get consumed(): number {
    return this.pos;
  }
}

export function decodeDump(bytes: Uint8Array): GradientDump {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const cursor = new Cursor(bytes, view);
  const magic = new TextDecoder().decode(cursor.take(4, "magic"));
  if (magic !== MAGIC) {
    throw new BadMagicError(`not a gradient dump: magic ${JSON.stringify(magic)}`);
  }
  const version = cursor.u32("version");
  if (version !== VERSION) {
    throw new DumpError(`unsupported dump version ${version}, expected ${VERSION}`);
  }
  const nTrain = cursor.u32("nTrain");
  const nTest = cursor.u32("nTest");
  const nLayers = cursor.u32("nLayers");
  if (nLayers === 0) {
    throw new DumpError("dump declares zero layers");
  }
  const layerDims: number[] = [];
  for (let i = 0; i < nLayers; i++) {
    layerDims.push(cursor.u32(`layer dim ${i}`));
  }
  const width = layerDims.reduce((a, b) => a + b, 0);
  if (width === 0) {
    throw new DumpError("dump declares zero total dimension");
  }
  const rows = (count: number, what: string): Float32Array[] => {
    const out: Float32Array[] = [];
    for (let i = 0; i < count; i++) {
      out.push(cursor.floats(width, `${what} row ${i}`));
    }
    return out;
  };
  const trainRows = rows(nTrain, "train");
  const testRows = rows(nTest, "test");
  const decoder = new TextDecoder("utf-8", { fatal: true });
  const trainIds: string[] = [];
  for (let i = 0; i < nTrain; i++) {
    const length = cursor.u32(`id length ${i}`);
    trainIds.push(decoder.decode(cursor.take(length, `id ${i}`)));
  }
  if (cursor.consumed !== bytes.length) {
    throw new DumpError(`dump has ${bytes.length - cursor.consumed} trailing bytes`);
  }
  const dump = { layerDims, trainIds, trainRows, testRows };
  validateDump(dump);
  return dump;
}

export function writeDump(dump: GradientDump, path: string): void {
  writeFileSync(path, encodeDump(dump));
}

export function readDump(path: string): GradientDump {
  return decodeDump(new Uint8Array(readFileSync(path)));
}
