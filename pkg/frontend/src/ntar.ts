/**
 * Writer (and test-support reader) for the engine's named tensor archive:
 * magic "NTAR" + version 0x01, an 8-byte little-endian header length, a JSON
 * header listing {name, shape, offset, nbytes} with offsets relative to the
 * payload, then raw little-endian float32 data. Output is deterministic in
 * the insertion order of the tensor map, so re-exports are byte-identical.
 */

const MAGIC = [0x4e, 0x54, 0x41, 0x52]; // "NTAR"
const VERSION = 1;

export interface NtarEntry {
  name: string;
  shape: number[];
  offset: number;
  nbytes: number;
}

export function writeNtar(tensors: Map<string, { shape: number[]; data: Float32Array }>): Uint8Array {
  const entries: NtarEntry[] = [];
  const blobs: Uint8Array[] = [];
  let offset = 0;
  const seen = new Set<string>();
  for (const [name, t] of tensors) {
    if (seen.has(name)) {
      throw new Error(`duplicate tensor name ${name}`);
    }
    seen.add(name);
    const count = t.shape.reduce((a, b) => a * b, 1);
    if (count !== t.data.length) {
      throw new Error(`tensor ${name}: ${t.data.length} values for shape [${t.shape}]`);
    }
    const bytes = littleEndianBytes(t.data);
    entries.push({ name, shape: t.shape, offset, nbytes: bytes.length });
    blobs.push(bytes);
    offset += bytes.length;
  }
  const header = new TextEncoder().encode(JSON.stringify(entries));
  const out = new Uint8Array(4 + 1 + 8 + header.length + offset);
  out.set(MAGIC, 0);
  out[4] = VERSION;
  new DataView(out.buffer).setBigUint64(5, BigInt(header.length), true);
  out.set(header, 13);
  let cursor = 13 + header.length;
  for (const blob of blobs) {
    out.set(blob, cursor);
    cursor += blob.length;
  }
  return out;
}

export function readNtar(data: Uint8Array): Map<string, { shape: number[]; data: Float32Array }> {
  if (data.length < 13 || data[0] !== 0x4e || data[1] !== 0x54 || data[2] !== 0x41 || data[3] !== 0x52) {
    throw new Error('bad magic: not a named tensor archive');
  }
  if (data[4] !== VERSION) {
    throw new Error(`unsupported archive version ${data[4]}`);
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const headerLen = Number(view.getBigUint64(5, true));
  const entries = JSON.parse(new TextDecoder().decode(data.subarray(13, 13 + headerLen))) as NtarEntry[];
  const payload = data.subarray(13 + headerLen);
  const out = new Map<string, { shape: number[]; data: Float32Array }>();
  for (const entry of entries) {
    if (out.has(entry.name)) {
      throw new Error(`duplicate tensor name ${entry.name}`);
    }
    if (entry.offset + entry.nbytes > payload.length) {
      throw new Error(`truncated payload for tensor ${entry.name}`);
    }
    const bytes = payload.subarray(entry.offset, entry.offset + entry.nbytes);
    const values = new Float32Array(entry.nbytes / 4);
    const dv = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
    for (let i = 0; i < values.length; i++) {
      values[i] = dv.getFloat32(i * 4, true);
    }
    out.set(entry.name, { shape: entry.shape, data: values });
  }
  return out;
}

function littleEndianBytes(data: Float32Array): Uint8Array {
  const out = new Uint8Array(data.length * 4);
  const dv = new DataView(out.buffer);
  for (let i = 0; i < data.length; i++) {
    dv.setFloat32(i * 4, data[i], true);
  }
  return out;
}
