#!/usr/bin/env node
/**
 * plot <trace.csv> --panel flows|prices|resets [--series A-C,E-B]
 *                  [--window W] --out <file.svg>
 */
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { Panel, PlotSpec, render } from "./render.js";

export function specFromArgv(argv: string[]): PlotSpec {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      panel: { type: "string" },
      series: { type: "string", default: "" },
      window: { type: "string", default: "1" },
      out: { type: "string" },
    },
  });
  if (positionals.length !== 1) {
    throw new Error("usage: plot <trace.csv> --panel flows|prices|resets [--series names] [--window W] --out file.svg");
  }
  const panel = values.panel as string | undefined;
  if (panel !== "flows" && panel !== "prices" && panel !== "resets") {
    throw new Error(`--panel must be flows, prices, or resets (got ${panel ?? "nothing"})`);
  }
  if (!values.out) {
    throw new Error("--out <file.svg> is required");
  }
  const window = Number(values.window);
  return {
    tracePath: positionals[0],
    panel: panel as Panel,
    series: (values.series as string).split(",").map((s) => s.trim()).filter((s) => s.length > 0),
    window,
    outPath: values.out as string,
  };
}

export function main(argv: string[]): number {
  try {
    const spec = specFromArgv(argv);
    render(spec);
    console.log(`wrote ${spec.outPath}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
