/**
 * Bundle assembly: read the source checkpoint (safetensors) plus its sidecar
 * metadata, convert weights into the engine archive, and write the export
 * bundle: model.ntar, model.json, the name-mapping table, and the parity
 * fixture (image + logits produced by the source framework).
 */

import { copyFileSync, mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { dirname, join, resolve } from 'node:path';

import { convertCheckpoint, type SourceMeta } from './mapping.js';
import { writeNtar } from './ntar.js';
import { parseSafetensors } from './safetensors.js';

export interface ExportResult {
  archivePath: string;
  configPath: string;
  mappingPath: string;
  fixtureFiles: string[];
}

export function exportBundle(checkpointPath: string, metaPath: string, outDir: string): ExportResult {
  const tensors = parseSafetensors(new Uint8Array(readFileSync(checkpointPath)));
  const meta = JSON.parse(readFileSync(metaPath, 'utf-8')) as SourceMeta;
  const { config, mapped } = convertCheckpoint(tensors, meta);

  mkdirSync(outDir, { recursive: true });
  const ordered = new Map(mapped.map((t) => [t.target, { shape: t.shape, data: t.data }]));
  const archivePath = join(outDir, 'model.ntar');
  writeFileSync(archivePath, writeNtar(ordered));

  const configPath = join(outDir, 'model.json');
  writeFileSync(configPath, JSON.stringify(config, Object.keys(config).sort(), 2) + '\n');

  const mappingPath = join(outDir, 'mapping.json');
  const table = mapped.map((t) => ({ source: t.source, target: t.target, shape: t.shape }));
  writeFileSync(mappingPath, JSON.stringify({ downcast: 'float32', tensors: table }, null, 2) + '\n');

  const fixtureFiles: string[] = [];
  const metaDir = dirname(resolve(metaPath));
  for (const [key, name] of [['fixtureImage', 'fixture.png'], ['fixtureLogits', 'fixture_logits.csv']] as const) {
    const src = meta[key];
    if (src) {
      const dest = join(outDir, name);
      copyFileSync(resolve(metaDir, src), dest);
      fixtureFiles.push(dest);
    }
  }
  return { archivePath, configPath, mappingPath, fixtureFiles };
}
