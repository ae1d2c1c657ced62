import { readFileSync } from "node:fs";

export interface Table {
  header: string[];
  columns: Map<string, number[]>;
  rows: number;
}

/** Parse a simple numeric CSV with a header row. */
export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new Error("CSV needs a header row and at least one data row");
  }
  const header = lines[0].split(",").map((h) => h.trim());
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new Error(`CSV row ${i} has ${cells.length} cells, expected ${header.length}`);
    }
    for (let j = 0; j < header.length; j++) {
      const value = Number(cells[j]);
      if (!Number.isFinite(value)) {
        throw new Error(`CSV row ${i}, column ${header[j]}: not a number`);
      }
      columns.get(header[j])!.push(value);
    }
  }
  return { header, columns, rows: lines.length - 1 };
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch {
    throw new Error(`cannot read ${path}`);
  }
  try {
    return parseCsv(text);
  } catch (err) {
    throw new Error(`${path}: ${(err as Error).message}`);
  }
}

export function column(table: Table, name: string, file: string): number[] {
  const col = table.columns.get(name);
  if (!col) throw new Error(`${file}: missing column ${name}`);
  return col;
}
