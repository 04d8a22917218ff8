#!/usr/bin/env node
/** `plot` command: render benchmark CSVs into an SVG figure. */

import * as fs from 'node:fs';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { readBenchCsvs } from './csv.js';
import { FIGURE_KINDS, FigureKind, renderFigure } from './figures.js';
import { SchemaError } from './schema.js';

export async function main(argv: string[]): Promise<number> {
  let usageError = false;
  const parser = yargs(argv)
    .scriptName('plot')
    .usage('$0 --kind KIND --in CSV... --out FILE')
    .option('kind', {
      choices: FIGURE_KINDS,
      demandOption: true,
      describe: 'figure to render',
    })
    .option('in', {
      type: 'string',
      array: true,
      demandOption: true,
      describe: 'input benchmark CSV files (merged)',
    })
    .option('out', {
      type: 'string',
      demandOption: true,
      describe: 'output SVG path',
    })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      usageError = true;
      console.error(msg ?? err?.message ?? 'usage error');
    });

  const args = await parser.parse();
  if (usageError) return 1;

  try {
    const rows = readBenchCsvs(args.in as string[]);
    const svg = renderFigure(args.kind as FigureKind, rows);
    fs.writeFileSync(args.out as string, svg, 'utf-8');
    console.log(`wrote ${args.out} (${rows.length} rows, kind=${args.kind})`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(err.message);
      return 2;
    }
    console.error(err instanceof Error ? err.message : String(err));
    return 2;
  }
}

const isDirectRun =
  process.argv[1] !== undefined && import.meta.url === `file://${process.argv[1]}`;
if (isDirectRun) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
