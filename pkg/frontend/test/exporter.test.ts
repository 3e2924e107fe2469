import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { describe, expect, test } from 'vitest';

import { exportBundle } from '../src/exporter.js';
import { readNtar } from '../src/ntar.js';
import { buildSafetensors } from '../src/safetensors.js';

function syntheticCheckpoint(dir: string): { checkpoint: string; meta: string } {
  const dim = 8, grid = 2, patch = 4, cats = 3, depth = 1;
  let counter = 0;
  const filled = (shape: number[]) => {
    const n = shape.reduce((a, b) => a * b, 1);
    const data = new Float32Array(n);
    for (let i = 0; i < n; i++) data[i] = Math.fround(Math.sin(counter++));
    return { shape, data };
  };
  const t = new Map<string, { shape: number[]; data: Float32Array }>();
  t.set('cls_token', filled([1, 1, dim]));
  t.set('pos_embed', filled([1, grid * grid + 1, dim]));
  t.set('patch_embed.proj.weight', filled([dim, 3, patch, patch]));
  t.set('patch_embed.proj.bias', filled([dim]));
  for (const suffix of [
    ['norm1.weight', [dim]], ['norm1.bias', [dim]],
    ['attn.qkv.weight', [3 * dim, dim]], ['attn.qkv.bias', [3 * dim]],
    ['attn.proj.weight', [dim, dim]], ['attn.proj.bias', [dim]],
    ['norm2.weight', [dim]], ['norm2.bias', [dim]],
    ['mlp.fc1.weight', [2 * dim, dim]], ['mlp.fc1.bias', [2 * dim]],
    ['mlp.fc2.weight', [dim, 2 * dim]], ['mlp.fc2.bias', [dim]],
  ] as [string, number[]][]) {
    t.set(`blocks.0.${suffix[0]}`, filled(suffix[1]));
  }
  t.set('norm.weight', filled([dim]));
  t.set('norm.bias', filled([dim]));
  t.set('head.weight', filled([cats, dim]));
  t.set('head.bias', filled([cats]));

  const checkpoint = join(dir, 'model.safetensors');
  writeFileSync(checkpoint, buildSafetensors(t));
  const meta = join(dir, 'source_meta.json');
  writeFileSync(meta, JSON.stringify({
    headCount: 2, layerNormEps: 1e-6,
    mean: [0.5, 0.5, 0.5], std: [0.25, 0.25, 0.25],
    categories: ['a', 'b', 'c'],
  }));
  void depth;
  return { checkpoint, meta };
}

describe('exportBundle', () => {
  test('writes archive, config and mapping table', () => {
    const dir = mkdtempSync(join(tmpdir(), 'export-'));
    const { checkpoint, meta } = syntheticCheckpoint(dir);
    const result = exportBundle(checkpoint, meta, join(dir, 'bundle'));
    const archive = readNtar(new Uint8Array(readFileSync(result.archivePath)));
    expect(archive.size).toBe(4 + 12 + 4);
    expect(archive.get('patch_embed.weight')!.shape).toEqual([8, 48]);
    const config = JSON.parse(readFileSync(result.configPath, 'utf-8'));
    expect(config.gridSide).toBe(2);
    expect(config.categories).toEqual(['a', 'b', 'c']);
    const mapping = JSON.parse(readFileSync(result.mappingPath, 'utf-8'));
    expect(mapping.downcast).toBe('float32');
    expect(mapping.tensors[0]).toEqual({ source: 'cls_token', target: 'cls_token', shape: [8] });
  });

  test('weight values roundtrip bitwise through the archive', () => {
    const dir = mkdtempSync(join(tmpdir(), 'export-'));
    const { checkpoint, meta } = syntheticCheckpoint(dir);
    const result = exportBundle(checkpoint, meta, join(dir, 'bundle'));
    const archive = readNtar(new Uint8Array(readFileSync(result.archivePath)));
    const source = buildSafetensors(new Map([['x', {
      shape: [8], data: archive.get('cls_token')!.data,
    }]]));
    void source;
    // spot value equality against the synthetic generator
    expect(archive.get('cls_token')!.data[0]).toBe(Math.fround(Math.sin(0)));
    expect(archive.get('head.bias')!.data[2]).not.toBe(0);
  });

  test('re-export is byte-identical', () => {
    const dir = mkdtempSync(join(tmpdir(), 'export-'));
    const { checkpoint, meta } = syntheticCheckpoint(dir);
    const a = exportBundle(checkpoint, meta, join(dir, 'b1'));
    const b = exportBundle(checkpoint, meta, join(dir, 'b2'));
    expect(Buffer.from(readFileSync(a.archivePath)).equals(readFileSync(b.archivePath))).toBe(true);
  });
});
