import { describe, expect, it } from "vitest";

import { parseTrace, requireColumn, TraceError } from "../src/trace.js";
import { TINY_TRACE } from "./fixtures.js";

describe("parseTrace", () => {
  it("reads slots, numeric columns, and reset lists", () => {
    const trace = parseTrace(TINY_TRACE);
    expect(trace.slots).toEqual([0, 1, 2]);
    expect(trace.channelNames).toEqual(["A-B", "B-C"]);
    expect(trace.pairNames).toEqual(["A-C"]);
    expect(trace.flowNames).toEqual(["A-C.0", "A-C.1"]);
    expect(Array.from(requireColumn(trace, "q.A-C"))).toEqual([5, 5, 5]);
    expect(Array.from(requireColumn(trace, "lambda.A-B"))).toEqual([0, 0.03, 0.04]);
    expect(trace.resets).toEqual([[], ["A-B", "B-C"], ["B-C"]]);
  });

  it("keeps full double precision", () => {
    const value = 0.1 + 0.2; // 0.30000000000000004
    const text = [
      "slot,lambda.A-B,resets,dual_value",
      `0,${value.toPrecision(17)},,1`,
    ].join("\n");
    const trace = parseTrace(text);
    expect(requireColumn(trace, "lambda.A-B")[0]).toBe(value);
  });

  it("rejects an empty file and a header-only file", () => {
    expect(() => parseTrace("")).toThrow(TraceError);
    expect(() => parseTrace("slot,lambda.A-B,resets,dual_value")).toThrow(/no slots/);
  });

  it("rejects malformed rows and columns", () => {
    expect(() => parseTrace("time,resets,dual_value\n0,,1")).toThrow(/first column/);
    expect(() =>
      parseTrace("slot,lambda.A-B,resets,dual_value\n0,oops,,1"),
    ).toThrow(/not numeric/);
    expect(() =>
      parseTrace("slot,lambda.A-B,resets,dual_value\n0,1,,1,9"),
    ).toThrow(/cells/);
  });

  it("names the missing column", () => {
    const trace = parseTrace(TINY_TRACE);
    expect(() => requireColumn(trace, "q.E-B")).toThrow(/no column "q.E-B"/);
  });
});
