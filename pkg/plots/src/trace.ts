/**
 * Reader for the simulator's trace CSV.
 *
 * Schema (one header row):
 *   slot, lambda.<u>-<v>..., flow.<i>-<j>.<k>..., q.<i>-<j>...,
 *   net.<u>-<v>..., resets, dual_value
 *
 * The resets cell is a semicolon-joined list of channel names; every other
 * cell is numeric. The reader never writes to the file.
 */
import { readFileSync } from "node:fs";

export class TraceError extends Error {}

export interface Trace {
  slots: number[];
  /** Numeric columns by exact header name. */
  columns: Map<string, Float64Array>;
  /** Channel names that reset in each slot. */
  resets: string[][];
  channelNames: string[];
  pairNames: string[];
  flowNames: string[];
}

export function parseTrace(text: string): Trace {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new TraceError("trace file is empty");
  }
  const header = lines[0].split(",");
  if (header[0] !== "slot") {
    throw new TraceError(`first column must be "slot", got "${header[0]}"`);
  }
  if (header[header.length - 1] !== "dual_value" || header[header.length - 2] !== "resets") {
    throw new TraceError('trace header must end with "resets,dual_value"');
  }
  const rows = lines.slice(1);
  if (rows.length === 0) {
    throw new TraceError("trace has a header but no slots");
  }

  const resetsIndex = header.length - 2;
  const numericNames = header.filter((_, k) => k !== 0 && k !== resetsIndex);
  const columns = new Map<string, Float64Array>(
    numericNames.map((name) => [name, new Float64Array(rows.length)]),
  );
  const slots: number[] = new Array(rows.length);
  const resets: string[][] = new Array(rows.length);

  rows.forEach((line, r) => {
    const cells = line.split(",");
    if (cells.length !== header.length) {
      throw new TraceError(`row ${r + 2} has ${cells.length} cells, expected ${header.length}`);
    }
    slots[r] = Number(cells[0]);
    resets[r] = cells[resetsIndex] === "" ? [] : cells[resetsIndex].split(";");
    let n = 0;
    for (let k = 1; k < cells.length; k++) {
      if (k === resetsIndex) continue;
      const value = Number(cells[k]);
      if (Number.isNaN(value)) {
        throw new TraceError(`row ${r + 2}, column "${header[k]}" is not numeric: "${cells[k]}"`);
      }
      columns.get(numericNames[n])![r] = value;
      n += 1;
    }
  });

  const channelNames = header
    .filter((name) => name.startsWith("lambda."))
    .map((name) => name.slice("lambda.".length));
  const pairNames = header
    .filter((name) => name.startsWith("q."))
    .map((name) => name.slice("q.".length));
  const flowNames = header
    .filter((name) => name.startsWith("flow."))
    .map((name) => name.slice("flow.".length));
  return { slots, columns, resets, channelNames, pairNames, flowNames };
}

export function loadTrace(path: string): Trace {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new TraceError(`cannot read trace file ${path}: ${(err as Error).message}`);
  }
  return parseTrace(text);
}

export function requireColumn(trace: Trace, name: string): Float64Array {
  const column = trace.columns.get(name);
  if (column === undefined) {
    throw new TraceError(`trace has no column "${name}"`);
  }
  return column;
}
