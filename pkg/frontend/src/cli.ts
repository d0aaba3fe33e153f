import { writeFileSync } from "fs";

import { avgLoss, defaultPatternUe, lossPattern, lossScatter, RenderResult } from "./figures";

const USAGE = `usage: figures --figure <loss-scatter|avg-loss|loss-pattern> --in <csv> --out <svg>
               [--meta <side_by_side.csv>] [--ue <index>] [--report <json>]

  loss-scatter   --in side_by_side.csv
  avg-loss       --in series_all.csv
  loss-pattern   --in series_all.csv, plus --ue N or --meta side_by_side.csv
                 (default UE: the one with the highest loss tolerance)
`;

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad argument '${key}'`);
    }
    args.set(key.slice(2), argv[i + 1]);
  }
  return args;
}

export function main(argv: string[]): number {
  let args: Map<string, string>;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    console.error(USAGE);
    return 2;
  }
  const figure = args.get("figure");
  const input = args.get("in");
  const out = args.get("out");
  if (!figure || !input || !out) {
    console.error(USAGE);
    return 2;
  }
  try {
    let result: RenderResult;
    if (figure === "loss-scatter") {
      result = lossScatter(input);
    } else if (figure === "avg-loss") {
      result = avgLoss(input);
    } else if (figure === "loss-pattern") {
      let ue: number;
      if (args.has("ue")) {
        ue = Number(args.get("ue"));
      } else if (args.has("meta")) {
        ue = defaultPatternUe(args.get("meta")!);
      } else {
        console.error("loss-pattern needs --ue or --meta");
        return 2;
      }
      result = lossPattern(input, ue);
    } else {
      console.error(`unknown figure '${figure}'`);
      console.error(USAGE);
      return 2;
    }
    writeFileSync(out, result.svg);
    const report = {
      figure: result.figure,
      input,
      output: out,
      series: result.series,
    };
    const reportPath = args.get("report") ?? `${out}.report.json`;
    writeFileSync(reportPath, JSON.stringify(report, null, 1) + "\n");
    console.log(`wrote ${out} (${result.series.map((s) => `${s.name}:${s.points}`).join(" ")})`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
