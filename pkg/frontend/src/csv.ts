/**
 * Minimal strict CSV reading with schema validation.
 *
 * The producing side writes plain comma-separated values with a header
 * row and no quoting, so no general CSV dialect handling is needed.
 * Figures declare the columns they read; unknown extra columns are
 * ignored with a warning (forward compatibility), missing ones are a
 * hard error carrying the expected-vs-found diff.
 */

import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: string[][];
}

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) throw new SchemaError(`${path}: empty file`);
  const columns = lines[0]!.split(",");
  const rows = lines.slice(1).map((line) => line.split(","));
  return { columns, rows };
}

/**
 * Check that every required column exists; returns an index map.
 * Extra columns produce a warning on stderr, never an error.
 */
export function requireColumns(
  table: Table,
  required: string[],
  context: string,
): Map<string, number> {
  const found = new Map<string, number>();
  table.columns.forEach((name, i) => found.set(name, i));
  const missing = required.filter((name) => !found.has(name));
  if (missing.length > 0) {
    throw new SchemaError(
      `${context}: schema mismatch\n` +
        `  expected columns: ${required.join(", ")}\n` +
        `  found columns   : ${table.columns.join(", ")}\n` +
        `  missing         : ${missing.join(", ")}`,
    );
  }
  const extra = table.columns.filter((name) => !required.includes(name));
  if (extra.length > 0) {
    process.stderr.write(
      `${context}: ignoring unknown columns: ${extra.join(", ")}\n`,
    );
  }
  const index = new Map<string, number>();
  for (const name of required) index.set(name, found.get(name)!);
  return index;
}

/** Numeric column accessor (NaN cells are a schema error). */
export function numericColumn(
  table: Table,
  index: Map<string, number>,
  name: string,
): number[] {
  const col = index.get(name);
  if (col === undefined) throw new SchemaError(`column ${name} not requested`);
  return table.rows.map((row, r) => {
    const value = Number(row[col]);
    if (Number.isNaN(value)) {
      throw new SchemaError(`row ${r + 1}, column ${name}: not a number`);
    }
    return value;
  });
}
