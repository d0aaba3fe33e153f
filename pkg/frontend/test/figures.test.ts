import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli";
import { avgLoss, defaultPatternUe, lossPattern, lossScatter } from "../src/figures";

const FIXTURES = join(__dirname, "fixtures");
const SIDE = join(FIXTURES, "side_by_side.csv");
const SERIES = join(FIXTURES, "series_all.csv");

describe("loss-scatter", () => {
  it("plots tolerance plus one mark set per policy", () => {
    const result = lossScatter(SIDE);
    const names = result.series.map((s) => s.name);
    expect(names).toEqual(["tolerance", "mw", "mwp", "expq"]);
    for (const summary of result.series) {
      expect(summary.points).toBe(4);
    }
    expect(result.svg).toContain("<svg");
    expect(result.svg).toContain('data-series="expq"');
  });

  it("max of plotted series equals max column value", () => {
    const result = lossScatter(SIDE);
    const expqMax = result.series.find((s) => s.name === "expq")!.max;
    expect(expqMax).toBeCloseTo(0.45, 12); // max of unserved_expq in the fixture
    const tolMax = result.series.find((s) => s.name === "tolerance")!.max;
    expect(tolMax).toBeCloseTo(0.32, 12);
  });

  it("names a missing column", () => {
    const path = join(mkdtempSync(join(tmpdir(), "fig-")), "bad.csv");
    writeFileSync(path, "ue,group\n0,1\n");
    expect(() => lossScatter(path)).toThrow(/loss_tolerance/);
  });
});

describe("avg-loss", () => {
  it("averages the ema over UEs per policy and second", () => {
    const result = avgLoss(SERIES);
    expect(result.series.map((s) => s.name).sort()).toEqual(["expq", "mw", "mwp"]);
    const mw = result.series.find((s) => s.name === "mw")!;
    expect(mw.points).toBe(2);
    // second 2: mean of 0.022 and 0.0242
    expect(mw.max).toBeCloseTo((0.022 + 0.0242) / 2, 12);
  });
});

describe("loss-pattern", () => {
  it("selects the highest-tolerance UE by default", () => {
    expect(defaultPatternUe(SIDE)).toBe(0); // ties broken by first row (0.32)
  });

  it("plots one line per policy in percent", () => {
    const result = lossPattern(SERIES, 0);
    const expq = result.series.find((s) => s.name === "expq")!;
    expect(expq.max).toBeCloseTo(60, 12); // 0.6 -> 60%
    expect(expq.points).toBe(2);
  });

  it("rejects a UE absent from the series", () => {
    expect(() => lossPattern(SERIES, 99)).toThrow(/UE 99/);
  });
});

describe("cli", () => {
  it("renders all three figures and writes reports", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-cli-"));
    const cases: Array<[string, string[]]> = [
      ["loss-scatter", ["--in", SIDE]],
      ["avg-loss", ["--in", SERIES]],
      ["loss-pattern", ["--in", SERIES, "--meta", SIDE]],
    ];
    for (const [figure, extra] of cases) {
      const out = join(dir, `${figure}.svg`);
      const code = main(["--figure", figure, ...extra, "--out", out]);
      expect(code).toBe(0);
      expect(readFileSync(out, "utf8")).toContain("<svg");
      const report = JSON.parse(readFileSync(`${out}.report.json`, "utf8"));
      expect(report.figure).toBe(figure);
      expect(report.series.length).toBeGreaterThan(0);
    }
  });

  it("exits 2 on usage errors", () => {
    expect(main(["--figure", "nope"])).toBe(2);
    expect(main([])).toBe(2);
  });

  it("exits 1 on schema errors", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-err-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "second,policy\n1,mw\n");
    expect(main(["--figure", "avg-loss", "--in", bad, "--out", join(dir, "x.svg")])).toBe(1);
  });
});
