import { describe, expect, it } from "vitest";

import { num, parseCsv, requireColumns } from "../src/csv";

describe("parseCsv", () => {
  it("parses header and rows", () => {
    const rows = parseCsv("a,b\n1,2\n3,4\n");
    expect(rows).toEqual([
      { a: "1", b: "2" },
      { a: "3", b: "4" },
    ]);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1\n")).toThrow(/row 2/);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("")).toThrow(/empty/);
  });
});

describe("num", () => {
  it("converts numeric cells", () => {
    expect(num({ x: "0.25" }, "x")).toBe(0.25);
  });

  it("names the missing column", () => {
    expect(() => num({ x: "1" }, "loss")).toThrow(/column 'loss'/);
  });

  it("rejects non-numeric cells", () => {
    expect(() => num({ x: "abc" }, "x")).toThrow(/not a number/);
  });
});

describe("requireColumns", () => {
  it("names the first missing column", () => {
    expect(() => requireColumns([{ a: "1" }], ["a", "ema"])).toThrow(/column 'ema'/);
  });
});
