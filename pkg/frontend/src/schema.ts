/** Benchmark CSV schema: fixed column order emitted by the solver CLI. */

export const CSV_COLUMNS = [
  'solver',
  'horizon',
  'step',
  'warm',
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
] as const;

export interface BenchRow {
  solver: string;
  horizon: number;
  step: number;
  warm: boolean;
  wall_ns: number;
  inner_iters: number;
  outer_iters: number;
  cg_iters: number;
  gamma_halvings: number;
  residual: number;
  violation: number;
  cost: number;
  px: number;
  py: number;
  pz: number;
}

export class SchemaError extends Error {
  constructor(
    message: string,
    readonly missing: string[] = [],
    readonly unexpected: string[] = [],
  ) {
    super(message);
    this.name = 'SchemaError';
  }
}

/** Check a header row against the schema; throws with column diagnostics. */
export function validateHeader(fields: string[], source: string): void {
  const expected = CSV_COLUMNS as readonly string[];
  const missing = expected.filter((c) => !fields.includes(c));
  const unexpected = fields.filter((c) => !expected.includes(c));
  if (missing.length > 0 || unexpected.length > 0) {
    const parts = [`${source}: header does not match the benchmark schema`];
    if (missing.length > 0) parts.push(`missing columns: ${missing.join(', ')}`);
    if (unexpected.length > 0) parts.push(`unexpected columns: ${unexpected.join(', ')}`);
    throw new SchemaError(parts.join('; '), missing, unexpected);
  }
}
