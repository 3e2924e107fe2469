import { describe, expect, test } from 'vitest';

import { convertCheckpoint, UnsupportedArchitectureError, type SourceMeta } from '../src/mapping.js';
import type { TensorMap } from '../src/safetensors.js';

const META: SourceMeta = {
  headCount: 2,
  layerNormEps: 1e-6,
  mean: [0.5, 0.5, 0.5],
  std: [0.25, 0.25, 0.25],
  categories: ['a', 'b', 'c'],
};

function zeros(shape: number[]): { dtype: string; shape: number[]; data: Float32Array } {
  return { dtype: 'F32', shape, data: new Float32Array(shape.reduce((a, b) => a * b, 1)) };
}

function tinyVit(depth = 2, dim = 8, grid = 2, patch = 4, cats = 3): TensorMap {
  const t: TensorMap = new Map();
  t.set('cls_token', zeros([1, 1, dim]));
  t.set('pos_embed', zeros([1, grid * grid + 1, dim]));
  t.set('patch_embed.proj.weight', zeros([dim, 3, patch, patch]));
  t.set('patch_embed.proj.bias', zeros([dim]));
  for (let i = 0; i < depth; i++) {
    t.set(`blocks.${i}.norm1.weight`, zeros([dim]));
    t.set(`blocks.${i}.norm1.bias`, zeros([dim]));
    t.set(`blocks.${i}.attn.qkv.weight`, zeros([3 * dim, dim]));
    t.set(`blocks.${i}.attn.qkv.bias`, zeros([3 * dim]));
    t.set(`blocks.${i}.attn.proj.weight`, zeros([dim, dim]));
    t.set(`blocks.${i}.attn.proj.bias`, zeros([dim]));
    t.set(`blocks.${i}.norm2.weight`, zeros([dim]));
    t.set(`blocks.${i}.norm2.bias`, zeros([dim]));
    t.set(`blocks.${i}.mlp.fc1.weight`, zeros([2 * dim, dim]));
    t.set(`blocks.${i}.mlp.fc1.bias`, zeros([2 * dim]));
    t.set(`blocks.${i}.mlp.fc2.weight`, zeros([dim, 2 * dim]));
    t.set(`blocks.${i}.mlp.fc2.bias`, zeros([dim]));
  }
  t.set('norm.weight', zeros([dim]));
  t.set('norm.bias', zeros([dim]));
  t.set('head.weight', zeros([cats, dim]));
  t.set('head.bias', zeros([cats]));
  return t;
}

describe('convertCheckpoint', () => {
  test('infers geometry from tensor shapes', () => {
    const { config, mapped } = convertCheckpoint(tinyVit(), META);
    expect(config).toMatchObject({
      gridSide: 2, patchSize: 4, embedDim: 8, depth: 2,
      headCount: 2, categoryCount: 3, mlpRatio: 2,
    });
    const byTarget = new Map(mapped.map((m) => [m.target, m]));
    expect(byTarget.get('cls_token')!.shape).toEqual([8]);
    expect(byTarget.get('pos_embed')!.shape).toEqual([5, 8]);
    expect(byTarget.get('patch_embed.weight')!.shape).toEqual([8, 48]);
    expect(mapped[0].target).toBe('cls_token'); // canonical engine order
    expect(mapped[mapped.length - 1].target).toBe('head.bias');
  });

  test('convolutional stem is an unsupported architecture', () => {
    const t = tinyVit();
    t.set('patch_embed.backbone.stem.conv.weight', zeros([8, 3, 3, 3]));
    t.set('patch_embed.backbone.stem.conv.bias', zeros([8]));
    try {
      convertCheckpoint(t, META);
      expect.unreachable('should have thrown');
    } catch (err) {
      expect(err).toBeInstanceOf(UnsupportedArchitectureError);
      const unmapped = (err as UnsupportedArchitectureError).unmapped;
      expect(unmapped).toContain('patch_embed.backbone.stem.conv.weight');
      expect(unmapped).toContain('patch_embed.backbone.stem.conv.bias');
    }
  });

  test('category count must match the metadata', () => {
    expect(() => convertCheckpoint(tinyVit(2, 8, 2, 4, 5), META)).toThrow(/5 categories|head emits/);
  });

  test('non-square grids are rejected', () => {
    const t = tinyVit();
    t.set('pos_embed', zeros([1, 7, 8])); // 6 patch tokens: not a square grid
    expect(() => convertCheckpoint(t, META)).toThrow(UnsupportedArchitectureError);
  });
});
