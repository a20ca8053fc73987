/** Label-table CSV parsing and the client-side export summary. */

export interface LabelRow {
  frameId: number;
  timestampMs: number;
  peopleCount: number;
  customerCount: number | null;
}

const EXPECTED_HEADER = "frame_id,timestamp_ms,people_count,customer_count";

export function parseLabelCsv(text: string): LabelRow[] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() !== EXPECTED_HEADER) {
    throw new Error(`unexpected label header: ${lines[0] ?? "(empty)"}`);
  }
  return lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== 4) {
      throw new Error(`row ${i}: expected 4 columns, got ${cells.length}`);
    }
    return {
      frameId: Number(cells[0]),
      timestampMs: Number(cells[1]),
      peopleCount: Number(cells[2]),
      customerCount: cells[3] === "" ? null : Number(cells[3]),
    };
  });
}

/** Frequency of each count value across the table. */
export function countHistogram(
  rows: LabelRow[],
  column: "people" | "customers" = "people",
): Map<number, number> {
  const hist = new Map<number, number>();
  for (const row of rows) {
    const value = column === "people" ? row.peopleCount : row.customerCount;
    if (value === null) {
      continue;
    }
    hist.set(value, (hist.get(value) ?? 0) + 1);
  }
  return new Map([...hist.entries()].sort((a, b) => a[0] - b[0]));
}

export function formatHistogram(hist: Map<number, number>): string {
  return [...hist.entries()]
    .map(([count, frames]) => `${count}: ${frames} frame${frames === 1 ? "" : "s"}`)
    .join("\n");
}
