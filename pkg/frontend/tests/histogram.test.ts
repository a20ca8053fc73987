import { describe, expect, it } from "vitest";

import { countHistogram, formatHistogram, parseLabelCsv } from "../src/histogram";

const CSV = `frame_id,timestamp_ms,people_count,customer_count
0,0,2,1
1,50,2,
2,100,3,2
3,150,2,1
`;

describe("parseLabelCsv", () => {
  it("parses rows and blank customer cells", () => {
    const rows = parseLabelCsv(CSV);
    expect(rows).toHaveLength(4);
    expect(rows[0]).toEqual({ frameId: 0, timestampMs: 0, peopleCount: 2, customerCount: 1 });
    expect(rows[1].customerCount).toBeNull();
  });

  it("rejects an unexpected header", () => {
    expect(() => parseLabelCsv("a,b,c,d\n1,2,3,4")).toThrow(/header/);
  });

  it("rejects a malformed row", () => {
    expect(() => parseLabelCsv(CSV + "4,200,2")).toThrow(/columns/);
  });
});

describe("countHistogram", () => {
  it("tallies people counts in ascending order", () => {
    const hist = countHistogram(parseLabelCsv(CSV));
    expect([...hist.entries()]).toEqual([[2, 3], [3, 1]]);
  });

  it("skips blank cells when tallying customers", () => {
    const hist = countHistogram(parseLabelCsv(CSV), "customers");
    expect([...hist.entries()]).toEqual([[1, 2], [2, 1]]);
  });

  it("formats one line per count value", () => {
    const hist = countHistogram(parseLabelCsv(CSV));
    expect(formatHistogram(hist)).toBe("2: 3 frames\n3: 1 frame");
  });
});
