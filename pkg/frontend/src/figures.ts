import { num, readCsv, requireColumns, Row } from "./csv";
import { ChartSpec, renderChart, Series } from "./svg";

export const POLICIES = ["mw", "mwp", "expq"] as const;
const COLORS: Record<string, string> = {
  mw: "#1f77b4",
  mwp: "#2ca02c",
  expq: "#d62728",
  tolerance: "#555555",
};

export interface SeriesSummary {
  name: string;
  points: number;
  max: number;
}

export interface RenderResult {
  figure: string;
  svg: string;
  series: SeriesSummary[];
}

function summarize(series: Series[]): SeriesSummary[] {
  return series.map((s) => ({
    name: s.name,
    points: s.points.length,
    max: s.points.reduce((acc, p) => Math.max(acc, p[1]), -Infinity),
  }));
}

/** Tolerable vs encountered loss per UE, one mark set per policy. */
export function lossScatter(sideBySidePath: string): RenderResult {
  const rows = readCsv(sideBySidePath);
  requireColumns(rows, ["ue", "loss_tolerance"]);
  const present = POLICIES.filter((p) => `unserved_${p}` in rows[0]);
  if (present.length === 0) {
    throw new Error("missing column 'unserved_mw' (no per-policy loss columns)");
  }
  const series: Series[] = [
    {
      name: "tolerance",
      color: COLORS.tolerance,
      kind: "cross",
      points: rows.map((r) => [num(r, "ue"), num(r, "loss_tolerance")]),
    },
    ...present.map((p): Series => ({
      name: p,
      color: COLORS[p],
      kind: "scatter",
      points: rows.map((r) => [num(r, "ue"), num(r, `unserved_${p}`)]),
    })),
  ];
  const spec: ChartSpec = {
    title: "Tolerable loss vs loss encountered",
    xLabel: "UE index",
    yLabel: "loss fraction",
    series,
  };
  return { figure: "loss-scatter", svg: renderChart(spec), series: summarize(series) };
}

function groupSeries(rows: Row[]): Map<string, Row[]> {
  const byPolicy = new Map<string, Row[]>();
  for (const row of rows) {
    const key = row.policy;
    if (!byPolicy.has(key)) {
      byPolicy.set(key, []);
    }
    byPolicy.get(key)!.push(row);
  }
  return byPolicy;
}

/** Per-second exponentially averaged loss, averaged over UEs, per policy. */
export function avgLoss(seriesPath: string): RenderResult {
  const rows = readCsv(seriesPath);
  requireColumns(rows, ["second", "policy", "ue", "loss", "ema"]);
  const series: Series[] = [];
  for (const [policy, policyRows] of groupSeries(rows)) {
    const perSecond = new Map<number, { sum: number; count: number }>();
    for (const row of policyRows) {
      const second = num(row, "second");
      const entry = perSecond.get(second) ?? { sum: 0, count: 0 };
      entry.sum += num(row, "ema");
      entry.count += 1;
      perSecond.set(second, entry);
    }
    const points = [...perSecond.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([sec, { sum, count }]): [number, number] => [sec, sum / count]);
    series.push({ name: policy, color: COLORS[policy] ?? "#999", kind: "line", points });
  }
  series.sort((a, b) => a.name.localeCompare(b.name));
  const spec: ChartSpec = {
    title: "Average losses (exponentially averaged, mean over UEs)",
    xLabel: "time (s)",
    yLabel: "loss fraction",
    series,
  };
  return { figure: "avg-loss", svg: renderChart(spec), series: summarize(series) };
}

/** Pick the UE with the highest loss tolerance from side_by_side.csv. */
export function defaultPatternUe(sideBySidePath: string): number {
  const rows = readCsv(sideBySidePath);
  requireColumns(rows, ["ue", "loss_tolerance"]);
  let best = rows[0];
  for (const row of rows) {
    if (num(row, "loss_tolerance") > num(best, "loss_tolerance")) {
      best = row;
    }
  }
  return num(best, "ue");
}

/** Per-second loss pattern of one UE, one line per policy. */
export function lossPattern(seriesPath: string, ue: number): RenderResult {
  const rows = readCsv(seriesPath);
  requireColumns(rows, ["second", "policy", "ue", "loss"]);
  const series: Series[] = [];
  for (const [policy, policyRows] of groupSeries(rows)) {
    const points = policyRows
      .filter((row) => num(row, "ue") === ue)
      .map((row): [number, number] => [num(row, "second"), 100 * num(row, "loss")])
      .sort((a, b) => a[0] - b[0]);
    series.push({ name: policy, color: COLORS[policy] ?? "#999", kind: "line", points });
  }
  series.sort((a, b) => a.name.localeCompare(b.name));
  if (series.every((s) => s.points.length === 0)) {
    throw new Error(`no rows for UE ${ue}`);
  }
  const spec: ChartSpec = {
    title: `Loss pattern of UE ${ue} (per-second loss)`,
    xLabel: "time (s)",
    yLabel: "loss (%)",
    series,
  };
  return { figure: "loss-pattern", svg: renderChart(spec), series: summarize(series) };
}
