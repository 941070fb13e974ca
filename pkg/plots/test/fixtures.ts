import { execFileSync } from "node:child_process";
import { existsSync, mkdirSync } from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

const here = path.dirname(fileURLToPath(import.meta.url));
export const repoRoot = path.resolve(here, "..", "..");
export const fixtureDir = path.join(here, ".generated");

/**
 * Trace of the five-node ring at gamma = 0.01, produced by the simulator's
 * own command line (the only interface this package consumes). Cached on
 * disk because the run covers 5000 slots.
 */
export function ring5TracePath(): string {
  const outDir = path.join(fixtureDir, "ring5-run");
  const trace = path.join(outDir, "trace.csv");
  if (!existsSync(trace)) {
    mkdirSync(fixtureDir, { recursive: true });
    execFileSync(
      "python3",
      ["-m", "pcnflow", "run", "ring5", "--out-dir", outDir],
      { cwd: repoRoot, stdio: ["ignore", "ignore", "inherit"] },
    );
  }
  return trace;
}

/** A tiny handwritten trace in the exact CSV schema, three slots long. */
export const TINY_TRACE = [
  "slot,lambda.A-B,lambda.B-C,flow.A-C.0,flow.A-C.1,q.A-C,net.A-B,net.B-C,resets,dual_value",
  "0,0,0,4,1,5,3,1,,12.5",
  "1,0.03,0.01,3,2,5,1,0,A-B;B-C,11",
  "2,0.04,0.01,2.5,2.5,5,0,0,B-C,10.75",
].join("\n");
