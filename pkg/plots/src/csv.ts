/**
 * Minimal reader for the benchmark CSV outputs.
 *
 * The files are plain comma-separated numeric/text tables with a leading
 * `# seed=... config_sha256=...` provenance comment and a header row;
 * fields never contain commas or quotes, so no full CSV dialect handling
 * is needed.
 */

import * as fs from "node:fs";

export class CsvSchemaError extends Error {
  constructor(
    message: string,
    public readonly column: string,
  ) {
    super(message);
    this.name = "CsvSchemaError";
  }
}

export interface CsvTable {
  /** Path the table was read from (for error messages). */
  path: string;
  columns: string[];
  rows: string[][];
}

export function parseCsv(text: string, path = "<memory>"): CsvTable {
  const lines = text
    .split(/\r?\n/)
    .filter((line) => line.length > 0 && !line.startsWith("#"));
  if (lines.length === 0) {
    throw new CsvSchemaError(`${path}: no header row found`, "<header>");
  }
  const columns = lines[0].split(",");
  const rows: string[][] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new CsvSchemaError(
        `${path}: row has ${cells.length} cells, expected ${columns.length}`,
        "<row>",
      );
    }
    rows.push(cells);
  }
  return { path, columns, rows };
}

export function readCsvFile(path: string): CsvTable {
  return parseCsv(fs.readFileSync(path, "utf-8"), path);
}

/**
 * Check that a table carries every required column, and return an index
 * from column name to position. A mismatch names the offending column.
 */
export function requireColumns(table: CsvTable, required: string[]): Map<string, number> {
  const index = new Map<string, number>();
  table.columns.forEach((name, position) => index.set(name, position));
  for (const name of required) {
    if (!index.has(name)) {
      throw new CsvSchemaError(
        `${table.path}: missing required column "${name}" (found: ${table.columns.join(", ")})`,
        name,
      );
    }
  }
  return index;
}

export function numeric(table: CsvTable, row: string[], column: string, position: number): number {
  const value = Number(row[position]);
  if (!Number.isFinite(value)) {
    throw new CsvSchemaError(
      `${table.path}: column "${column}" holds non-numeric value "${row[position]}"`,
      column,
    );
  }
  return value;
}
