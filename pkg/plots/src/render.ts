/**
 * Panel assembly: pick the series for a panel, smooth them, and emit SVG.
 *
 * Panels:
 *   flows  — per-pair totals (q.<i>-<j> columns)
 *   prices — channel prices (lambda.<u>-<v> columns)
 *   resets — raster of (slot, channel) reset events
 */
import { writeFileSync } from "node:fs";

import { trailingAverage } from "./smooth.js";
import { loadTrace, requireColumn, Trace, TraceError } from "./trace.js";
import { eventRaster, lineChart, RasterMark, Series } from "./svg.js";

export type Panel = "flows" | "prices" | "resets";

export interface PlotSpec {
  tracePath: string;
  panel: Panel;
  /** Pair names for flows, channel names for prices/resets; empty = all. */
  series: string[];
  /** Trailing smoothing window in slots; 1 means raw values. */
  window: number;
  outPath: string;
}

function pickNames(available: string[], requested: string[], kind: string): string[] {
  if (requested.length === 0) {
    return available;
  }
  const missing = requested.filter((name) => !available.includes(name));
  if (missing.length > 0) {
    throw new TraceError(
      `unknown ${kind} series: ${missing.join(", ")} (trace has: ${available.join(", ")})`,
    );
  }
  return requested;
}

export function panelSeries(trace: Trace, spec: Pick<PlotSpec, "panel" | "series" | "window">): Series[] {
  if (spec.panel === "flows") {
    const names = pickNames(trace.pairNames, spec.series, "pair");
    return names.map((name) => ({
      name: `q.${name}`,
      values: trailingAverage(requireColumn(trace, `q.${name}`), spec.window),
    }));
  }
  if (spec.panel === "prices") {
    const names = pickNames(trace.channelNames, spec.series, "channel");
    return names.map((name) => ({
      name: `lambda.${name}`,
      values: trailingAverage(requireColumn(trace, `lambda.${name}`), spec.window),
    }));
  }
  throw new TraceError(`panel "${spec.panel}" has no line series`);
}

export function resetMarks(trace: Trace, requested: string[]): { channels: string[]; marks: RasterMark[] } {
  const channels = pickNames(trace.channelNames, requested, "channel");
  const wanted = new Set(channels);
  const marks: RasterMark[] = [];
  trace.resets.forEach((names, t) => {
    for (const name of names) {
      if (wanted.has(name)) {
        marks.push({ slot: trace.slots[t], channel: name });
      }
    }
  });
  return { channels, marks };
}

export function renderToString(spec: PlotSpec): string {
  if (!Number.isInteger(spec.window) || spec.window < 1) {
    throw new RangeError(`smoothing window must be an integer >= 1, got ${spec.window}`);
  }
  const trace = loadTrace(spec.tracePath);
  const suffix = spec.window > 1 ? ` (trailing average, window ${spec.window})` : "";
  if (spec.panel === "resets") {
    const { channels, marks } = resetMarks(trace, spec.series);
    const range: [number, number] = [trace.slots[0], trace.slots[trace.slots.length - 1]];
    return eventRaster("channel resets", range, channels, marks);
  }
  const series = panelSeries(trace, spec);
  const title = spec.panel === "flows" ? `pair flows${suffix}` : `channel prices${suffix}`;
  const yLabel = spec.panel === "flows" ? "flow (money per slot)" : "price";
  return lineChart(title, trace.slots, series, yLabel);
}

export function render(spec: PlotSpec): void {
  const svg = renderToString(spec);
  writeFileSync(spec.outPath, svg, "utf8");
}
