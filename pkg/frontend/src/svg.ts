/** Minimal deterministic SVG chart builder: axes, polylines, scatter marks. */

export interface Series {
  name: string;
  color: string;
  points: Array<[number, number]>;
  kind: "line" | "scatter" | "cross";
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  width?: number;
  height?: number;
}

const MARGIN = { top: 36, right: 24, bottom: 44, left: 56 };

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (hi <= lo) {
    hi = lo + 1;
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const candidates = [step, 2 * step, 5 * step, 10 * step];
  const chosen = candidates.find((c) => span / c <= count + 1) ?? 10 * step;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / chosen) * chosen; v <= hi + 1e-12; v += chosen) {
    ticks.push(Number(v.toFixed(10)));
  }
  return ticks;
}

export function renderChart(spec: ChartSpec): string {
  const width = spec.width ?? 720;
  const height = spec.height ?? 440;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs = spec.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p[1]));
  const xLo = Math.min(0, ...xs);
  const xHi = Math.max(1, ...xs);
  const yLo = Math.min(0, ...ys);
  const yHi = Math.max(1e-9, ...ys) * 1.08;

  const sx = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    `<text x="${width / 2}" y="20" text-anchor="middle" font-family="sans-serif" font-size="15">${spec.title}</text>`
  );

  for (const tick of niceTicks(xLo, xHi)) {
    const x = sx(tick);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" stroke="#eee"/>`,
      `<text x="${x}" y="${MARGIN.top + plotH + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">${tick}</text>`
    );
  }
  for (const tick of niceTicks(yLo, yHi)) {
    const y = sy(tick);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" stroke="#eee"/>`,
      `<text x="${MARGIN.left - 6}" y="${y + 4}" text-anchor="end" font-family="sans-serif" font-size="11">${Number(tick.toPrecision(4))}</text>`
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#444"/>`,
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 8}" text-anchor="middle" font-family="sans-serif" font-size="12">${spec.xLabel}</text>`,
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${spec.yLabel}</text>`
  );

  spec.series.forEach((series, index) => {
    if (series.kind === "line") {
      const path = series.points
        .map((p, i) => `${i === 0 ? "M" : "L"}${sx(p[0]).toFixed(2)},${sy(p[1]).toFixed(2)}`)
        .join("");
      parts.push(`<path d="${path}" fill="none" stroke="${series.color}" stroke-width="1.6" data-series="${series.name}"/>`);
    } else if (series.kind === "scatter") {
      for (const [px, py] of series.points) {
        parts.push(
          `<circle cx="${sx(px).toFixed(2)}" cy="${sy(py).toFixed(2)}" r="3.4" fill="${series.color}" fill-opacity="0.85" data-series="${series.name}"/>`
        );
      }
    } else {
      for (const [px, py] of series.points) {
        const x = sx(px);
        const y = sy(py);
        parts.push(
          `<path d="M${(x - 4).toFixed(2)},${y.toFixed(2)}L${(x + 4).toFixed(2)},${y.toFixed(2)}M${x.toFixed(2)},${(y - 4).toFixed(2)}L${x.toFixed(2)},${(y + 4).toFixed(2)}" stroke="${series.color}" stroke-width="1.6" data-series="${series.name}"/>`
        );
      }
    }
    const lx = MARGIN.left + plotW - 150;
    const ly = MARGIN.top + 16 + index * 16;
    parts.push(
      `<rect x="${lx}" y="${ly - 9}" width="10" height="10" fill="${series.color}"/>`,
      `<text x="${lx + 15}" y="${ly}" font-family="sans-serif" font-size="12">${series.name}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n");
}
