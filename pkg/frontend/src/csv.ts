import { readFileSync } from "fs";

export type Row = Record<string, string>;

/** Parse a simple comma-separated file with a header row (no quoting). */
export function parseCsv(text: string): Row[] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  return lines.slice(1).map((line, idx) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new Error(`row ${idx + 2}: expected ${header.length} cells, got ${cells.length}`);
    }
    const row: Row = {};
    header.forEach((name, i) => (row[name] = cells[i]));
    return row;
  });
}

export function readCsv(path: string): Row[] {
  return parseCsv(readFileSync(path, "utf8"));
}

export function num(row: Row, column: string): number {
  const raw = row[column];
  if (raw === undefined) {
    throw new Error(`missing column '${column}'`);
  }
  const value = Number(raw);
  if (Number.isNaN(value)) {
    throw new Error(`column '${column}': not a number: '${raw}'`);
  }
  return value;
}

export function requireColumns(rows: Row[], columns: string[]): void {
  if (rows.length === 0) {
    throw new Error("CSV has no data rows");
  }
  for (const column of columns) {
    if (!(column in rows[0])) {
      throw new Error(`missing column '${column}'`);
    }
  }
}
