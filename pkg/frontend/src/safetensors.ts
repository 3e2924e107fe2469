/**
 * Minimal safetensors reader: 8-byte little-endian header length, UTF-8 JSON
 * header mapping tensor name -> {dtype, shape, data_offsets}, then the raw
 * byte buffer. Everything is materialized as Float32Array (half-precision
 * sources are upcast).
 */

export interface TensorEntry {
  dtype: string;
  shape: number[];
  data: Float32Array;
}

export type TensorMap = Map<string, TensorEntry>;

interface HeaderEntry {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

const SUPPORTED = new Set(['F32', 'F16', 'BF16', 'F64']);

export function parseSafetensors(buffer: Uint8Array): TensorMap {
  if (buffer.length < 8) {
    throw new Error('safetensors: file too short for header length');
  }
  const view = new DataView(buffer.buffer, buffer.byteOffset, buffer.byteLength);
  const headerLen = Number(view.getBigUint64(0, true));
  if (8 + headerLen > buffer.length) {
    throw new Error('safetensors: truncated header');
  }
  const header = JSON.parse(new TextDecoder().decode(buffer.subarray(8, 8 + headerLen))) as Record<
    string,
    HeaderEntry | Record<string, string>
  >;
  const payload = buffer.subarray(8 + headerLen);
  const tensors: TensorMap = new Map();
  for (const [name, entry] of Object.entries(header)) {
    if (name === '__metadata__') continue;
    const { dtype, shape, data_offsets } = entry as HeaderEntry;
    if (!SUPPORTED.has(dtype)) {
      throw new Error(`safetensors: unsupported dtype ${dtype} for tensor ${name}`);
    }
    const [begin, end] = data_offsets;
    if (end > payload.length || begin > end) {
      throw new Error(`safetensors: bad data offsets for tensor ${name}`);
    }
    const bytes = payload.subarray(begin, end);
    const count = shape.reduce((a, b) => a * b, 1);
    const data = decodeToFloat32(dtype, bytes, count, name);
    tensors.set(name, { dtype, shape, data });
  }
  return tensors;
}

function decodeToFloat32(dtype: string, bytes: Uint8Array, count: number, name: string): Float32Array {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const itemSize = dtype === 'F64' ? 8 : dtype === 'F32' ? 4 : 2;
  if (bytes.length !== count * itemSize) {
    throw new Error(`safetensors: tensor ${name} has ${bytes.length} bytes for ${count} ${dtype} values`);
  }
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    if (dtype === 'F32') {
      out[i] = view.getFloat32(i * 4, true);
    } else if (dtype === 'F64') {
      out[i] = Math.fround(view.getFloat64(i * 8, true));
    } else if (dtype === 'BF16') {
      const bits = view.getUint16(i * 2, true);
      const f32 = new DataView(new ArrayBuffer(4));
      f32.setUint32(0, bits << 16, false);
      out[i] = f32.getFloat32(0, false);
    } else {
      out[i] = halfToFloat(view.getUint16(i * 2, true));
    }
  }
  return out;
}

function halfToFloat(h: number): number {
  const sign = (h & 0x8000) >> 15;
  const exp = (h & 0x7c00) >> 10;
  const frac = h & 0x03ff;
  if (exp === 0) {
    return (sign ? -1 : 1) * Math.pow(2, -14) * (frac / 1024);
  }
  if (exp === 0x1f) {
    return frac ? NaN : (sign ? -Infinity : Infinity);
  }
  return (sign ? -1 : 1) * Math.pow(2, exp - 15) * (1 + frac / 1024);
}

/** Serializer used by the tests to fabricate source checkpoints. */
export function buildSafetensors(tensors: Map<string, { shape: number[]; data: Float32Array }>): Uint8Array {
  const header: Record<string, HeaderEntry> = {};
  let offset = 0;
  const blobs: Uint8Array[] = [];
  for (const [name, t] of tensors) {
    const bytes = new Uint8Array(t.data.buffer.slice(t.data.byteOffset, t.data.byteOffset + t.data.byteLength));
    header[name] = { dtype: 'F32', shape: t.shape, data_offsets: [offset, offset + bytes.length] };
    blobs.push(bytes);
    offset += bytes.length;
  }
  const headerBytes = new TextEncoder().encode(JSON.stringify(header));
  const out = new Uint8Array(8 + headerBytes.length + offset);
  new DataView(out.buffer).setBigUint64(0, BigInt(headerBytes.length), true);
  out.set(headerBytes, 8);
  let cursor = 8 + headerBytes.length;
  for (const blob of blobs) {
    out.set(blob, cursor);
    cursor += blob.length;
  }
  return out;
}
