/**
 * Usage:
 *   node dist/cli.js export --checkpoint <model.safetensors> --meta <source_meta.json> --out <dir>
 *
 * Converts a pretrained class-token patch-transformer checkpoint into the
 * engine's named-tensor archive plus its config JSON and parity fixture.
 */

import { exportBundle } from './exporter.js';
import { UnsupportedArchitectureError } from './mapping.js';

interface Args {
  checkpoint?: string;
  meta?: string;
  out?: string;
}

function parseArgs(argv: string[]): { command: string; args: Args } {
  const [command, ...rest] = argv;
  const args: Args = {};
  for (let i = 0; i < rest.length; i++) {
    switch (rest[i]) {
      case '--checkpoint':
        args.checkpoint = rest[++i];
        break;
      case '--meta':
        args.meta = rest[++i];
        break;
      case '--out':
        args.out = rest[++i];
        break;
      default:
        throw new Error(`unknown argument ${rest[i]}`);
    }
  }
  return { command, args };
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  if (parsed.command !== 'export') {
    console.error(`unknown command ${parsed.command ?? '(none)'}; expected "export"`);
    return 2;
  }
  const { checkpoint, meta, out } = parsed.args;
  if (!checkpoint || !meta || !out) {
    console.error('export needs --checkpoint, --meta and --out');
    return 2;
  }
  try {
    const result = exportBundle(checkpoint, meta, out);
    console.log(`wrote ${result.archivePath}`);
    console.log(`wrote ${result.configPath}`);
    console.log(`wrote ${result.mappingPath}`);
    for (const f of result.fixtureFiles) {
      console.log(`copied ${f}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof UnsupportedArchitectureError) {
      console.error(String(err.message));
      return 3;
    }
    console.error(String(err));
    return 1;
  }
}

if (process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href) {
  process.exitCode = main(process.argv.slice(2));
}
