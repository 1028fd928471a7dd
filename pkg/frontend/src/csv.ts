/** Strict CSV reading for the lab's figure files: header row + rectangular body. */

export interface CsvTable {
  header: string[];
  /** Raw cell strings exactly as they appear in the file. */
  rows: string[][];
}

export class CsvError extends Error {}

export function parseCsv(text: string): CsvTable {
  const lines = text.split("\n").filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvError("CSV file is empty (no header row)");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new CsvError(`row ${i + 1} has ${cells.length} cells, header has ${header.length}`);
    }
    return cells;
  });
  if (rows.length === 0) {
    throw new CsvError("CSV file has a header but no data rows");
  }
  return { header, rows };
}

export interface Column {
  name: string;
  /** Raw strings, preserved for the verbatim dump mode. */
  raw: string[];
  values: number[];
}

export function extractColumns(table: CsvTable, required: string[]): Map<string, Column> {
  const missing = required.filter((name) => !table.header.includes(name));
  if (missing.length > 0) {
    throw new CsvError(`missing required columns: ${missing.join(", ")}`);
  }
  const out = new Map<string, Column>();
  for (const name of required) {
    const idx = table.header.indexOf(name);
    const raw = table.rows.map((row) => row[idx]);
    const values = raw.map((cell, i) => {
      const v = Number(cell);
      if (Number.isNaN(v) && cell !== "nan") {
        throw new CsvError(`column ${name}, row ${i + 1}: cannot parse ${JSON.stringify(cell)} as a number`);
      }
      return v;
    });
    out.set(name, { name, raw, values });
  }
  return out;
}
