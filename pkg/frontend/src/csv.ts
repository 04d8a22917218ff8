import * as fs from 'node:fs';
import Papa from 'papaparse';
import { BenchRow, SchemaError, validateHeader } from './schema.js';

const NUMERIC: (keyof BenchRow)[] = [
  'horizon',
  'step',
  'wall_ns',
  'inner_iters',
  'outer_iters',
  'cg_iters',
  'gamma_halvings',
  'residual',
  'violation',
  'cost',
  'px',
  'py',
  'pz',
];

/** Parse one benchmark CSV, validating the header and coercing the fields. */
export function readBenchCsv(path: string): BenchRow[] {
  const text = fs.readFileSync(path, 'utf-8');
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${path}: CSV parse error: ${first.message}`);
  }
  validateHeader(parsed.meta.fields ?? [], path);
  return parsed.data.map((raw, i) => {
    const row: Partial<BenchRow> = { solver: raw.solver };
    if (raw.warm !== 'true' && raw.warm !== 'false') {
      throw new SchemaError(`${path}: row ${i + 1}: warm must be 'true' or 'false'`);
    }
    row.warm = raw.warm === 'true';
    for (const key of NUMERIC) {
      const value = Number(raw[key]);
      if (Number.isNaN(value) && raw[key] !== 'nan') {
        throw new SchemaError(`${path}: row ${i + 1}: column ${key} is not numeric`);
      }
      (row as Record<string, unknown>)[key] = value;
    }
    return row as BenchRow;
  });
}

/** Read and concatenate several benchmark CSVs. */
export function readBenchCsvs(paths: string[]): BenchRow[] {
  return paths.flatMap((p) => readBenchCsv(p));
}
