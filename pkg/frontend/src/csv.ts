import { readFileSync } from "node:fs";
import Papa from "papaparse";

export type Row = Record<string, string>;

export function readCsv(path: string, required: string[]): Row[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: malformed CSV (${first.message})`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of required) {
    if (!fields.includes(column)) {
      throw new Error(`${path}: missing column "${column}"`);
    }
  }
  return parsed.data;
}

export function num(row: Row, column: string, path: string): number {
  const value = Number(row[column]);
  if (row[column] === "" || row[column] === undefined || !Number.isFinite(value)) {
    throw new Error(`${path}: column "${column}" holds non-numeric value "${row[column]}"`);
  }
  return value;
}

// Empty cells mark arms with nothing to aggregate; callers skip those rows.
export function maybeNum(row: Row, column: string, path: string): number | null {
  if (row[column] === "" || row[column] === undefined) return null;
  return num(row, column, path);
}

export function uniqueInOrder(values: string[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const value of values) {
    if (!seen.has(value)) {
      seen.add(value);
      out.push(value);
    }
  }
  return out;
}
