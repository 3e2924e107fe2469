/**
 * Name mapping from timm-style class-token ViT checkpoints to the engine's
 * tensor names, with geometry inference from tensor shapes. Any tensor the
 * map cannot place (convolutional stems, relative-position tables, text
 * towers, ...) raises an unsupported-architecture error listing the strays.
 */

import type { TensorMap } from './safetensors.js';

export interface SourceMeta {
  headCount: number;
  layerNormEps: number;
  mean: number[];
  std: number[];
  categories: string[];
  fixtureImage?: string;
  fixtureLogits?: string;
}

export interface EngineConfig {
  schemaVersion: number;
  gridSide: number;
  patchSize: number;
  embedDim: number;
  depth: number;
  headCount: number;
  categoryCount: number;
  mlpRatio: number;
  layerNormEps: number;
  mean: number[];
  std: number[];
  categories: string[];
}

export interface MappedTensor {
  source: string;
  target: string;
  shape: number[];
  data: Float32Array;
}

export class UnsupportedArchitectureError extends Error {
  constructor(public unmapped: string[]) {
    super(`unsupported architecture; unmapped tensors: ${unmapped.join(', ')}`);
  }
}

const BLOCK_SUFFIXES = [
  'norm1.weight', 'norm1.bias',
  'attn.qkv.weight', 'attn.qkv.bias',
  'attn.proj.weight', 'attn.proj.bias',
  'norm2.weight', 'norm2.bias',
  'mlp.fc1.weight', 'mlp.fc1.bias',
  'mlp.fc2.weight', 'mlp.fc2.bias',
];

function mapName(source: string): string | null {
  if (source === 'cls_token' || source === 'pos_embed') return source;
  if (source === 'patch_embed.proj.weight') return 'patch_embed.weight';
  if (source === 'patch_embed.proj.bias') return 'patch_embed.bias';
  if (['norm.weight', 'norm.bias', 'head.weight', 'head.bias'].includes(source)) return source;
  const block = source.match(/^blocks\.(\d+)\.(.+)$/);
  if (block && BLOCK_SUFFIXES.includes(block[2])) return source;
  return null;
}

export function convertCheckpoint(tensors: TensorMap, meta: SourceMeta): {
  config: EngineConfig;
  mapped: MappedTensor[];
} {
  const unmapped = [...tensors.keys()].filter((name) => mapName(name) === null);
  if (unmapped.length > 0) {
    throw new UnsupportedArchitectureError(unmapped.sort());
  }
  for (const required of ['cls_token', 'pos_embed', 'patch_embed.proj.weight', 'head.weight']) {
    if (!tensors.has(required)) {
      throw new UnsupportedArchitectureError([`<missing ${required}>`]);
    }
  }

  const patchW = tensors.get('patch_embed.proj.weight')!;
  if (patchW.shape.length !== 4 || patchW.shape[1] !== 3 || patchW.shape[2] !== patchW.shape[3]) {
    throw new UnsupportedArchitectureError(['patch_embed.proj.weight (not a square RGB patchifier)']);
  }
  const [embedDim, , patchSize] = patchW.shape;
  const posShape = tensors.get('pos_embed')!.shape;
  const tokenCount = posShape[posShape.length - 2];
  const gridSide = Math.round(Math.sqrt(tokenCount - 1));
  if (gridSide * gridSide + 1 !== tokenCount) {
    throw new UnsupportedArchitectureError(['pos_embed (token count is not a square grid + class token)']);
  }
  let depth = 0;
  for (const name of tensors.keys()) {
    const m = name.match(/^blocks\.(\d+)\./);
    if (m) depth = Math.max(depth, parseInt(m[1], 10) + 1);
  }
  const fc1 = tensors.get('blocks.0.mlp.fc1.weight');
  const mlpRatio = fc1 ? fc1.shape[0] / embedDim : 4.0;
  const categoryCount = tensors.get('head.weight')!.shape[0];
  if (meta.categories.length !== categoryCount) {
    throw new Error(`meta lists ${meta.categories.length} categories but head emits ${categoryCount}`);
  }

  const config: EngineConfig = {
    schemaVersion: 1,
    gridSide,
    patchSize,
    embedDim,
    depth,
    headCount: meta.headCount,
    categoryCount,
    mlpRatio,
    layerNormEps: meta.layerNormEps,
    mean: meta.mean,
    std: meta.std,
    categories: meta.categories,
  };

  // canonical engine order: embedding, blocks ascending, final norm, head
  const order: [string, string][] = [
    ['cls_token', 'cls_token'],
    ['pos_embed', 'pos_embed'],
    ['patch_embed.proj.weight', 'patch_embed.weight'],
    ['patch_embed.proj.bias', 'patch_embed.bias'],
  ];
  for (let i = 0; i < depth; i++) {
    for (const suffix of BLOCK_SUFFIXES) {
      order.push([`blocks.${i}.${suffix}`, `blocks.${i}.${suffix}`]);
    }
  }
  order.push(['norm.weight', 'norm.weight'], ['norm.bias', 'norm.bias'],
             ['head.weight', 'head.weight'], ['head.bias', 'head.bias']);

  const mapped: MappedTensor[] = [];
  for (const [source, target] of order) {
    const tensor = tensors.get(source);
    if (!tensor) {
      throw new UnsupportedArchitectureError([`<missing ${source}>`]);
    }
    let shape = tensor.shape;
    if (source === 'cls_token') {
      shape = [embedDim]; // (1, 1, D) -> (D)
    } else if (source === 'pos_embed') {
      shape = [tokenCount, embedDim]; // (1, T, D) -> (T, D)
    } else if (source === 'patch_embed.proj.weight') {
      shape = [embedDim, 3 * patchSize * patchSize]; // conv kernel -> flat projection
    }
    const count = shape.reduce((a, b) => a * b, 1);
    if (count !== tensor.data.length) {
      throw new Error(`tensor ${source}: cannot reshape ${tensor.data.length} values to [${shape}]`);
    }
    mapped.push({ source, target, shape, data: tensor.data });
  }
  return { config, mapped };
}
